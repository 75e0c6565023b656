"""Independent brute-force reference implementations.

Deliberately written in the most literal style possible, sharing no code
with the package, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product


def allocate_oracle(sizes: dict[str, int], total: int) -> dict[str, int]:
    """Largest-remainder allocation computed with exact fractions."""
    population = sum(sizes.values())
    if population == 0 or total == 0:
        return {key: 0 for key in sizes}
    quotas = {key: Fraction(size * total, population) for key, size in sizes.items()}
    floors = {key: int(quota) for key, quota in quotas.items()}
    leftover = total - sum(floors.values())
    order = sorted(
        sizes,
        key=lambda key: (-(quotas[key] - floors[key]), -sizes[key], key),
    )
    result = dict(floors)
    for key in order[:leftover]:
        result[key] += 1
    return result


def group_attributes_oracle(attributes, mapper) -> dict[str, list[str]]:
    """Literal restatement of descriptor grouping over a raw attribute list.

    Walk the attributes once, keep the first occurrence of each duplicate,
    file each one under its descriptor, or under itself when unmapped.
    """
    seen = []
    for attribute in attributes:
        if attribute not in seen:
            seen.append(attribute)
    groups: dict[str, list[str]] = {}
    for attribute in seen:
        descriptor = mapper(attribute)
        key = descriptor if descriptor is not None else attribute
        if key not in groups:
            groups[key] = []
        groups[key].append(attribute)
    return groups


def tfidf_oracle(doc_tokens: dict[str, list[str]], term: str, doc_id: str) -> float:
    """Raw term frequency times ln(N/df) over explicit token lists."""
    tf = doc_tokens[doc_id].count(term)
    df = sum(1 for tokens in doc_tokens.values() if term in tokens)
    if tf == 0 or df == 0:
        return 0.0
    return tf * math.log(len(doc_tokens) / df)


def doc_norm_oracle(doc_tokens: dict[str, list[str]], doc_id: str) -> float:
    total = 0.0
    for term in set(doc_tokens[doc_id]):
        weight = tfidf_oracle(doc_tokens, term, doc_id)
        total += weight * weight
    return math.sqrt(total)


def rank_oracle(
    doc_tokens: dict[str, list[str]],
    concepts: list[tuple[list[str], float]],
    top_n: int,
) -> list[tuple[str, float]]:
    """Exhaustive expansion scoring over every document.

    `concepts` is a list of (member attribute list, weight). Each expansion
    picks one member per concept; a document scores the best expansion of
    sum(tfidf * weight) / (doc norm * sqrt(concept count)).
    """
    k = len(concepts)
    expansions = list(product(*(members for members, _ in concepts)))
    weights = [weight for _, weight in concepts]
    scored = []
    for doc_id in sorted(doc_tokens):
        norm = doc_norm_oracle(doc_tokens, doc_id)
        if norm == 0.0:
            continue
        best = 0.0
        for expansion in expansions:
            total = 0.0
            for attr, weight in zip(expansion, weights):
                total += tfidf_oracle(doc_tokens, attr, doc_id) * weight
            total /= norm * math.sqrt(k)
            if total > best:
                best = total
        if best > 0.0:
            scored.append((doc_id, best))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:top_n]


def cosine_oracle(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def embedding_groups_oracle(
    items: list[tuple[str, list[float], int]],
    threshold: float,
) -> list[list[str]]:
    """Greedy seed grouping: highest frequency first, join the first seed
    whose vector is at least `threshold` cosine-similar, else open a group."""
    ordered = sorted(items, key=lambda item: (-item[2], item[0]))
    groups: list[dict] = []
    for attribute, vector, _freq in ordered:
        target = None
        for group in groups:
            if cosine_oracle(group["seed"], vector) >= threshold:
                target = group
                break
        if target is None:
            groups.append({"seed": vector, "members": [attribute]})
        else:
            target["members"].append(attribute)
    return [group["members"] for group in groups]


class BoolNode:
    """Tiny expression tree with its own evaluator and renderer."""

    def __init__(self, kind: str, children=None, atom: str | None = None):
        self.kind = kind  # "atom" | "and" | "or" | "not"
        self.children = children or []
        self.atom = atom

    def evaluate(self, assignment: dict[str, bool]) -> bool:
        if self.kind == "atom":
            return assignment[self.atom]
        if self.kind == "not":
            return not self.children[0].evaluate(assignment)
        if self.kind == "and":
            return all(child.evaluate(assignment) for child in self.children)
        return any(child.evaluate(assignment) for child in self.children)

    def render(self) -> str:
        if self.kind == "atom":
            return f"Tweets.Keyword.Contains('{self.atom}')"
        if self.kind == "not":
            return f"NOT [{self.children[0].render()}]"
        joiner = " AND " if self.kind == "and" else " OR "
        return "[" + joiner.join(child.render() for child in self.children) + "]"
