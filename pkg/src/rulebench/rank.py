"""Concept-based ranking and boolean concept-rule filtering.

A preference is an ordered list of weighted concepts. It expands into the
cartesian product of member attributes; each expansion is scored against a
document as a weighted tf-idf cosine, and the document keeps its best
expansion. Concept rules filter documents with AND/OR set algebra before
ranking the survivors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from itertools import product

from .corpus import Corpus
from .summarize import Concept


class RankError(Exception):
    pass


@dataclass
class Preference:
    """Concepts to rank by; weights must be positive and labels distinct."""

    concepts: list[Concept]

    def __post_init__(self):
        if not self.concepts:
            raise RankError("preference needs at least one concept")
        labels = [c.label for c in self.concepts]
        if len(set(labels)) != len(labels):
            raise RankError("preference concepts must have distinct labels")
        for concept in self.concepts:
            if concept.weight <= 0:
                raise RankError(f"concept {concept.label!r} needs a positive weight")

    @classmethod
    def from_dict(cls, raw: dict) -> "Preference":
        concepts = [Concept.from_dict(entry) for entry in raw.get("concepts", [])]
        return cls(concepts=concepts)


@dataclass(frozen=True)
class RankedItem:
    doc_id: str
    score: float
    contributions: dict[str, float]  # concept label -> share of the score

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "score": self.score,
            "contributions": dict(self.contributions),
        }


def concept_queries(preference: Preference) -> list[tuple[str, ...]]:
    """Cartesian product of member attributes, one per concept, in member order."""
    for concept in preference.concepts:
        if not concept.members:
            raise RankError(f"concept {concept.label!r} has no members")
    return list(product(*(c.members for c in preference.concepts)))


def score_document(
    corpus: Corpus,
    doc_id: str,
    preference: Preference,
    queries: list[tuple[str, ...]] | None = None,
) -> tuple[float, dict[str, float]]:
    """Best expansion score for one document plus its per-concept breakdown.

    An expansion q scores sum_c tfidf(attr_c, d) * W_c / (norm(d) * sqrt(k))
    with k concepts; the document takes the maximum over expansions, and the
    reported contributions are the winning expansion's summands.
    """
    if doc_id not in corpus.docs:
        raise RankError(f"unknown document id {doc_id!r}")
    if queries is None:
        queries = concept_queries(preference)
    k = len(preference.concepts)
    norm = corpus.doc_norm(doc_id) * math.sqrt(k)
    if norm == 0.0:
        return 0.0, {}
    best_score = 0.0
    best_contrib: dict[str, float] = {}
    for query in queries:
        parts = [
            corpus.tfidf(attr, doc_id) * concept.weight / norm
            for attr, concept in zip(query, preference.concepts)
        ]
        total = sum(parts)
        if total > best_score:
            best_score = total
            best_contrib = {
                concept.label: part for part, concept in zip(parts, preference.concepts)
            }
    return best_score, best_contrib


def _candidate_docs(corpus: Corpus, preference: Preference) -> set[str]:
    docs: set[str] = set()
    for concept in preference.concepts:
        for member in concept.members:
            docs |= corpus.containing_docs(member)
    return docs


def rank(preference: Preference, corpus: Corpus, top_n: int) -> list[RankedItem]:
    """Top documents by expansion score, descending; zero scores drop out."""
    if top_n < 1:
        raise RankError("top_n must be at least 1")
    queries = concept_queries(preference)
    items: list[RankedItem] = []
    for doc_id in sorted(_candidate_docs(corpus, preference)):
        score, contributions = score_document(corpus, doc_id, preference, queries)
        if score > 0.0:
            items.append(RankedItem(doc_id=doc_id, score=score, contributions=contributions))
    items.sort(key=lambda item: (-item.score, item.doc_id))
    return items[:top_n]


# ---------------------------------------------------------------- concept rules


_EXPR_TOKEN_RE = re.compile(r"\s*(\[|\]|[A-Za-z0-9_~.\-]+)")


def _tokenize_expr(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        match = _EXPR_TOKEN_RE.match(text, pos)
        if match is None:
            if text[pos:].strip():
                raise RankError(f"unexpected character {text[pos:].strip()[0]!r} in concept rule")
            break
        tokens.append(match.group(1))
        pos = match.end()
    return tokens


class _ExprParser:
    """`[` `]`-grouped AND/OR expressions over concept names; AND binds tighter."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise RankError("concept rule ended unexpectedly")
        self.pos += 1
        return token

    def parse(self):
        expr = self.parse_or()
        if self.peek() is not None:
            raise RankError(f"unexpected token {self.peek()!r} in concept rule")
        return expr

    def parse_or(self):
        parts = [self.parse_and()]
        while self.peek() is not None and self.peek().upper() == "OR":
            self.take()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def parse_and(self):
        parts = [self.parse_atom()]
        while self.peek() is not None and self.peek().upper() == "AND":
            self.take()
            parts.append(self.parse_atom())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def parse_atom(self):
        token = self.take()
        if token == "[":
            inner = self.parse_or()
            closing = self.take()
            if closing != "]":
                raise RankError("expected ']' in concept rule")
            return inner
        if token in ("]",) or token.upper() in ("AND", "OR"):
            raise RankError(f"expected a concept name, got {token!r}")
        return ("name", token)


def parse_concept_expr(text: str):
    tokens = _tokenize_expr(text)
    if not tokens:
        raise RankError("empty concept rule")
    return _ExprParser(tokens).parse()


def _referenced_names(expr) -> list[str]:
    kind = expr[0]
    if kind == "name":
        return [expr[1]]
    names: list[str] = []
    for part in expr[1]:
        for name in _referenced_names(part):
            if name not in names:
                names.append(name)
    return names


def _expr_docs(expr, concept_docs: dict[str, set[str]]) -> set[str]:
    kind = expr[0]
    if kind == "name":
        return concept_docs[expr[1]]
    parts = [_expr_docs(p, concept_docs) for p in expr[1]]
    result = parts[0]
    for part in parts[1:]:
        result = result & part if kind == "and" else result | part
    return result


def eval_concept_rule(
    text: str,
    concepts: dict[str, Concept],
    corpus: Corpus,
    top_n: int,
) -> list[RankedItem]:
    """Filter documents with the boolean rule, then rank the survivors.

    "Contains a concept" means the document contains at least one member
    attribute. Survivors are ranked over all referenced concepts together; a
    referenced concept without a stored weight ranks with unit weight.
    """
    expr = parse_concept_expr(text)
    names = _referenced_names(expr)
    missing = [n for n in names if n not in concepts]
    if missing:
        raise RankError(f"unresolved concept name {missing[0]!r}")
    concept_docs = {
        name: {
            doc_id
            for member in concepts[name].members
            for doc_id in corpus.containing_docs(member)
        }
        for name in names
    }
    passers = _expr_docs(expr, concept_docs)
    if not passers:
        return []
    weighted = []
    for name in names:
        concept = concepts[name]
        if concept.weight <= 0:
            concept = Concept(
                label=concept.label,
                kind=concept.kind,
                members=concept.members,
                weight=1.0,
                frequency=concept.frequency,
                relevancy=concept.relevancy,
            )
        weighted.append(concept)
    preference = Preference(concepts=weighted)
    ranked = rank(preference, corpus, top_n=max(top_n, len(passers)))
    filtered = [item for item in ranked if item.doc_id in passers]
    return filtered[:top_n]
