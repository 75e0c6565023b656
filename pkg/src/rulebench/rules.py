"""Feature, rule-tree and path model plus rule evaluation over documents.

A rule is a tagged tree of predicate features; every root-to-leaf path is a
conjunction and a document is annotated when at least one path fully matches.
Evaluation is pure; rule mutation belongs to the adaptation engine.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .corpus import Corpus, TokenView, preprocess
from .stem import stem

FUNCTIONS = (
    "keyword",
    "topic",
    "category",
    "entity_person",
    "entity_org",
    "entity_location",
    "hashtag",
)

OPERATORS = ("contains", "exact", "in_group")

# which operators each extractor kind accepts
COMPATIBLE = {
    "keyword": ("contains", "exact"),
    "hashtag": ("contains", "exact"),
    "topic": ("in_group",),
    "category": ("in_group",),
    "entity_person": ("in_group",),
    "entity_org": ("in_group",),
    "entity_location": ("in_group",),
}

ENTITY_KIND = {
    "entity_person": "person",
    "entity_org": "organization",
    "entity_location": "location",
}


class RuleError(Exception):
    """Raised for invalid rule structures or evaluation failures."""


@dataclass(frozen=True)
class Feature:
    """One dataset.function.operator(argument) predicate."""

    dataset: str
    function: str
    operator: str
    argument: str
    negated: bool = False

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise RuleError(f"unknown function {self.function!r}")
        if self.operator not in OPERATORS:
            raise RuleError(f"unknown operator {self.operator!r}")
        if self.operator not in COMPATIBLE[self.function]:
            raise RuleError(
                f"operator {self.operator!r} not valid for function {self.function!r}"
            )
        if not self.argument:
            raise RuleError("feature argument must be non-empty")
        if not self.dataset:
            raise RuleError("feature dataset must be non-empty")

    def key(self) -> tuple:
        return (self.dataset, self.function, self.operator, self.argument, self.negated)


@dataclass
class RuleNode:
    feature: Feature
    children: list["RuleNode"] = field(default_factory=list)

    def copy(self) -> "RuleNode":
        return RuleNode(self.feature, [c.copy() for c in self.children])


@dataclass
class RuleTree:
    """A tagged tree of features; a list of roots means the union of subtrees."""

    rule_id: str
    tag: str
    roots: list[RuleNode]
    children_cap: int = 10

    def copy(self) -> "RuleTree":
        return RuleTree(self.rule_id, self.tag, [r.copy() for r in self.roots], self.children_cap)

    def validate(self) -> None:
        if not self.tag:
            raise RuleError("rule tag must be non-empty")
        if self.children_cap < 1:
            raise RuleError("children cap must be positive")
        if not self.roots:
            raise RuleError("rule must have at least one root feature")
        self._validate_siblings(self.roots)
        for path in enumerate_paths(self):
            if all(f.negated for f in path.features):
                raise RuleError(f"path {path.path_id} has no non-negated feature")

    def _validate_siblings(self, siblings: list[RuleNode]) -> None:
        if len(siblings) > self.children_cap:
            raise RuleError(
                f"{len(siblings)} siblings exceed the children cap {self.children_cap}"
            )
        seen = set()
        for node in siblings:
            key = node.feature.key()
            if key in seen:
                raise RuleError(f"duplicate sibling feature {key}")
            seen.add(key)
            self._validate_siblings(node.children)


@dataclass(frozen=True)
class Path:
    path_id: str
    features: tuple[Feature, ...]


@dataclass
class AnnotationBatch:
    round: int
    rule_id: str
    entries: dict[str, list[str]]  # doc id -> matched path ids

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class MatchResult:
    doc_id: str
    path_ids: tuple[str, ...]
    tag: str


@dataclass(frozen=True)
class DocView:
    """Everything feature evaluation needs to know about one document."""

    doc_id: str
    tokens: frozenset[str]
    raw_terms: frozenset[str]
    hashtags: frozenset[str]
    mentions: dict = field(default_factory=dict)  # entity kind -> frozenset of surfaces


def doc_view_from_tokens(doc_id: str, view: TokenView, mentions: dict | None = None) -> DocView:
    return DocView(
        doc_id=doc_id,
        tokens=frozenset(view.tokens),
        raw_terms=frozenset(view.raw_terms),
        hashtags=frozenset(view.hashtags),
        mentions=mentions or {},
    )


def path_key(features) -> str:
    """Stable identifier for a feature sequence."""
    joined = "|".join("~".join(map(str, f.key())) for f in features)
    return hashlib.sha1(joined.encode("utf-8")).hexdigest()[:12]


def enumerate_paths(rule: RuleTree) -> list[Path]:
    """All root-to-leaf feature sequences, depth first in sibling order."""
    paths: list[Path] = []

    def walk(node: RuleNode, prefix: tuple[Feature, ...]) -> None:
        seq = prefix + (node.feature,)
        if not node.children:
            paths.append(Path(path_id=path_key(seq), features=seq))
            return
        for child in node.children:
            walk(child, seq)

    for root in rule.roots:
        walk(root, ())
    return paths


def _member_tokens(member: str) -> tuple[str, ...]:
    view = preprocess(member)
    if view.tokens:
        return view.tokens
    # stopword-only or non-word member: fall back to raw stems
    return tuple(stem(t) for t in member.casefold().split() if t)


def _resolve_concept(argument: str, concepts) -> tuple[str, ...]:
    """Member attributes of a named concept.

    The registry may hold bare member tuples or objects exposing `members`
    (summary concepts); both resolve to the member tuple.
    """
    if concepts is None:
        raise RuleError(f"unresolved concept reference {argument!r}")
    concept = concepts.get(argument)
    if concept is None:
        raise RuleError(f"unresolved concept reference {argument!r}")
    return tuple(getattr(concept, "members", concept))


def evaluate_feature(feature: Feature, doc_view: DocView, concepts=None) -> bool:
    """True iff the predicate holds on the document view.

    `concepts` maps concept names to objects with `members`; required for
    in_group features. Negated features return the complement.
    """
    result = _evaluate_base(feature, doc_view, concepts)
    return not result if feature.negated else result


def _evaluate_base(feature: Feature, doc_view: DocView, concepts) -> bool:
    fn, op, arg = feature.function, feature.operator, feature.argument
    if fn == "keyword":
        if op == "contains":
            parts = _member_tokens(arg)
            return bool(parts) and all(p in doc_view.tokens for p in parts)
        return arg.casefold() in doc_view.raw_terms
    if fn == "hashtag":
        tag = arg.casefold().lstrip("#")
        return tag in doc_view.hashtags
    members = _resolve_concept(arg, concepts)
    if fn in ("topic", "category"):
        for member in members:
            parts = _member_tokens(member)
            if parts and all(p in doc_view.tokens for p in parts):
                return True
        return False
    kind = ENTITY_KIND[fn]
    surfaces = doc_view.mentions.get(kind, frozenset())
    return any(member.casefold() in surfaces for member in members)


def match_rule(rule: RuleTree, doc_view: DocView, concepts=None) -> MatchResult | None:
    """Match one document; lists every path whose conjunction holds."""
    matched: list[str] = []
    for path in enumerate_paths(rule):
        if all(evaluate_feature(f, doc_view, concepts) for f in path.features):
            matched.append(path.path_id)
    if not matched:
        return None
    return MatchResult(doc_id=doc_view.doc_id, path_ids=tuple(matched), tag=rule.tag)


def feature_doc_ids(
    feature: Feature,
    corpus: Corpus,
    concepts=None,
    mention_postings: dict | None = None,
) -> set[str]:
    """Documents satisfying one feature, computed from the inverted index."""
    fn, op, arg = feature.function, feature.operator, feature.argument
    if fn == "keyword":
        if op == "contains":
            docs = _token_conjunction_docs(_member_tokens(arg), corpus)
        else:
            docs = set(corpus.raw_postings.get(arg.casefold(), ()))
    elif fn == "hashtag":
        docs = set(corpus.hashtag_postings.get(arg.casefold().lstrip("#"), ()))
    elif fn in ("topic", "category"):
        docs = set()
        for member in _resolve_concept(arg, concepts):
            docs |= _token_conjunction_docs(_member_tokens(member), corpus)
    else:
        kind = ENTITY_KIND[fn]
        by_surface = (mention_postings or {}).get(kind, {})
        docs = set()
        for member in _resolve_concept(arg, concepts):
            docs |= by_surface.get(member.casefold(), set())
    if feature.negated:
        return corpus.all_ids() - docs
    return docs


def _token_conjunction_docs(parts: tuple[str, ...], corpus: Corpus) -> set[str]:
    if not parts:
        return set()
    docs: set[str] | None = None
    for part in parts:
        ids = corpus.postings.get(part, set())
        docs = set(ids) if docs is None else docs & ids
        if not docs:
            return set()
    return docs


def annotate_corpus(
    rule: RuleTree,
    corpus: Corpus,
    round_no: int,
    concepts=None,
    mention_postings: dict | None = None,
) -> AnnotationBatch:
    """Annotate every matching document, attributing all matching paths.

    Pure function of (rule, corpus): uses index set algebra per path, which is
    equivalent to per-document evaluation (checked by the test suite).
    """
    if corpus.doc_count == 0:
        return AnnotationBatch(round=round_no, rule_id=rule.rule_id, entries={})
    entries: dict[str, list[str]] = {}
    for path in enumerate_paths(rule):
        docs: set[str] | None = None
        for feat in path.features:
            ids = feature_doc_ids(feat, corpus, concepts, mention_postings)
            docs = ids if docs is None else docs & ids
            if not docs:
                break
        for doc_id in docs or ():
            entries.setdefault(doc_id, []).append(path.path_id)
    ordered = {doc_id: entries[doc_id] for doc_id in sorted(entries)}
    return AnnotationBatch(round=round_no, rule_id=rule.rule_id, entries=ordered)


def keym_match(bag_of_words: set[str], doc_view: DocView) -> bool:
    """Bag-of-words baseline: true iff any term occurs in the token list."""
    if not bag_of_words:
        raise RuleError("keym bag must be non-empty")
    return any(stem(term.casefold()) in doc_view.tokens for term in bag_of_words)


def rule_features(rule: RuleTree) -> set[Feature]:
    """Every feature currently used anywhere in the tree."""
    out: set[Feature] = set()

    def walk(node: RuleNode) -> None:
        out.add(node.feature)
        for child in node.children:
            walk(child)

    for root in rule.roots:
        walk(root)
    return out


def used_argument_tokens(rule: RuleTree, concepts=None) -> set[str]:
    """Stems already consumed by the rule's features (and concept members)."""
    used: set[str] = set()
    for feat in rule_features(rule):
        if feat.function in ("keyword", "hashtag"):
            used.update(_member_tokens(feat.argument))
        elif concepts is not None and feat.argument in concepts:
            for member in _resolve_concept(feat.argument, concepts):
                used.update(_member_tokens(member))
    return used


def make_rule(rule_id: str, tag: str, roots: list[RuleNode], children_cap: int = 10) -> RuleTree:
    rule = RuleTree(rule_id=rule_id, tag=tag, roots=roots, children_cap=children_cap)
    rule.validate()
    return rule


def keyword(dataset: str, argument: str, negated: bool = False, operator: str = "contains") -> Feature:
    return Feature(dataset, "keyword", operator, argument, negated)


__all__ = [
    "AnnotationBatch",
    "COMPATIBLE",
    "DocView",
    "Feature",
    "FUNCTIONS",
    "MatchResult",
    "OPERATORS",
    "Path",
    "RuleError",
    "RuleNode",
    "RuleTree",
    "annotate_corpus",
    "doc_view_from_tokens",
    "enumerate_paths",
    "evaluate_feature",
    "feature_doc_ids",
    "keym_match",
    "keyword",
    "make_rule",
    "match_rule",
    "path_key",
    "rule_features",
    "used_argument_tokens",
]
