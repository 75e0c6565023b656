"""Concept summaries: descriptor grouping, embedding grouping, corpus summaries.

Attributes (keywords, entity surfaces) are lifted into concepts two ways: by a
shared lexicon descriptor (one pass, singleton fallback for unmapped
attributes) or by greedy cosine agglomeration of descriptor embeddings. A
summary orders the most frequent concepts of each kind for display.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus
from .knowledge import (
    Annotation,
    EmbeddingTable,
    KnowledgeBase,
    KnowledgeError,
    cosine,
    embed_text,
    scan_mentions,
)

KINDS = ("topic", "category", "person", "organization", "location", "keyword")

DEFAULT_WEDGES = 50
GROUPING_THRESHOLD = 0.7
MAX_USER_WEIGHT = 10.0


class SummarizeError(Exception):
    pass


@dataclass
class Concept:
    """A labeled group of attributes of one kind.

    `frequency` is the number of corpus documents containing at least one
    member; `relevancy` is that frequency scaled by the kind's maximum.
    """

    label: str
    kind: str
    members: tuple[str, ...]
    weight: float = 0.0
    frequency: int = 0
    relevancy: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SummarizeError(f"unknown concept kind {self.kind!r}")
        if not self.members:
            raise SummarizeError(f"concept {self.label!r} has no members")
        if len(set(self.members)) != len(self.members):
            raise SummarizeError(f"concept {self.label!r} has duplicate members")
        if self.weight < 0:
            raise SummarizeError(f"concept {self.label!r} has negative weight")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind,
            "members": list(self.members),
            "weight": self.weight,
            "frequency": self.frequency,
            "relevancy": self.relevancy,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Concept":
        return cls(
            label=raw["label"],
            kind=raw["kind"],
            members=tuple(raw["members"]),
            weight=float(raw.get("weight", 0.0)),
            frequency=int(raw.get("frequency", 0)),
            relevancy=float(raw.get("relevancy", 0.0)),
        )


def check_user_weight(weight: float) -> float:
    """User-adjustable concept weights live in [0, 10]."""
    if not 0.0 <= weight <= MAX_USER_WEIGHT:
        raise SummarizeError(f"concept weight {weight} outside [0, {MAX_USER_WEIGHT}]")
    return float(weight)


@dataclass
class SummarySet:
    """Per-kind ordered concept lists, highest document frequency first."""

    kinds: dict[str, list[Concept]] = field(default_factory=dict)
    wedge_count: int = DEFAULT_WEDGES
    errors: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "wedge_count": self.wedge_count,
            "kinds": {k: [c.to_dict() for c in v] for k, v in self.kinds.items()},
            "errors": dict(self.errors),
        }


def summarize_features(attributes, mapper) -> dict[str, list[str]]:
    """Group attributes by their lexicon descriptor.

    Groups are keyed by the descriptor string; an attribute the mapper cannot
    describe forms a group keyed by its own surface form. Every input
    attribute lands in exactly one group; duplicates are folded first.
    """
    if not attributes:
        raise SummarizeError("attribute list must be non-empty")
    seen: set[str] = set()
    ordered: list[str] = []
    for attr in attributes:
        if attr not in seen:
            seen.add(attr)
            ordered.append(attr)
    groups: dict[str, list[str]] = {}
    for attr in ordered:
        descriptor = mapper(attr)
        key = descriptor if descriptor is not None else attr
        groups.setdefault(key, []).append(attr)
    return groups


def embed_annotation(annotation: Annotation, table: EmbeddingTable):
    """Vector sum of the descriptor's content tokens; None when all are OOV."""
    return embed_text(annotation.descriptor, table)


@dataclass(frozen=True)
class EmbeddedAttribute:
    attribute: str
    vector: tuple[float, ...]
    frequency: int


def group_by_embedding(
    embedded: list[EmbeddedAttribute],
    threshold: float = GROUPING_THRESHOLD,
    kind: str = "keyword",
) -> list[Concept]:
    """Greedy agglomeration: walk attributes by descending frequency, join the
    first group whose seed vector is cosine-similar at or above the threshold,
    else found a new group. The seed (= most frequent member) labels the group.
    """
    dims = {len(e.vector) for e in embedded}
    if len(dims) > 1:
        raise SummarizeError(f"mixed vector dimensions {sorted(dims)}")
    order = sorted(embedded, key=lambda e: (-e.frequency, e.attribute))
    seeds: list[EmbeddedAttribute] = []
    groups: list[list[EmbeddedAttribute]] = []
    for item in order:
        for seed, group in zip(seeds, groups):
            if cosine(item.vector, seed.vector) >= threshold:
                group.append(item)
                break
        else:
            seeds.append(item)
            groups.append([item])
    return [
        Concept(
            label=seed.attribute,
            kind=kind,
            members=tuple(e.attribute for e in group),
            frequency=sum(e.frequency for e in group),
        )
        for seed, group in zip(seeds, groups)
    ]


def _finalize_kind(concepts: list[Concept], corpus: Corpus, wedge_count: int) -> list[Concept]:
    """Order by document frequency, truncate to the wedge budget, scale relevancy."""
    for concept in concepts:
        covered: set[str] = set()
        for member in concept.members:
            covered |= corpus.containing_docs(member)
        concept.frequency = len(covered)
    concepts = [c for c in concepts if c.frequency > 0]
    concepts.sort(key=lambda c: (-c.frequency, c.label))
    concepts = concepts[:wedge_count]
    if concepts:
        top = concepts[0].frequency
        for concept in concepts:
            concept.relevancy = concept.frequency / top
            weights = [corpus.mean_tfidf(m) for m in concept.members]
            concept.weight = sum(weights) / len(weights)
    return concepts


def _topic_concepts(corpus: Corpus, kb: KnowledgeBase) -> list[Concept]:
    if kb.hypernyms is None:
        raise KnowledgeError("hypernym lexicon not loaded")
    vocabulary = sorted(corpus.postings)
    if not vocabulary:
        return []
    mapper = kb.hypernyms.lookup
    concepts = []
    for key, members in summarize_features(vocabulary, mapper).items():
        if any(mapper(m) == key for m in members):
            concepts.append(Concept(label=key, kind="topic", members=tuple(members)))
    return concepts


def _category_concepts(corpus: Corpus, kb: KnowledgeBase) -> list[Concept]:
    if kb.categories is None or kb.embeddings is None:
        raise KnowledgeError("category model not loaded")

    def mapper(term: str) -> str | None:
        vector = kb.embeddings.get(term)
        if vector is None:
            return None
        return kb.categories.nearest(vector)

    vocabulary = sorted(t for t in corpus.raw_postings if t not in corpus.stopwords)
    if not vocabulary:
        return []
    concepts = []
    for key, members in summarize_features(vocabulary, mapper).items():
        if any(mapper(m) == key for m in members):
            concepts.append(Concept(label=key, kind="category", members=tuple(members)))
    return concepts


def _entity_concepts(
    kind: str, postings: dict[str, set[str]], kb: KnowledgeBase
) -> list[Concept]:
    """Group one entity kind's mentions by descriptor embedding similarity."""
    surfaces = sorted(s for s, ids in postings.items() if ids)
    if not surfaces:
        return []
    embedded: list[EmbeddedAttribute] = []
    leftovers: list[tuple[str, int]] = []
    for surface in surfaces:
        freq = len(postings[surface])
        vector = None
        if kb.embeddings is not None:
            _, descriptor = kb.gazetteer.entries[surface]
            annotation = Annotation(attribute=surface, descriptor=descriptor, kind=kind)
            vector = embed_annotation(annotation, kb.embeddings)
        if vector is None:
            leftovers.append((surface, freq))
        else:
            embedded.append(EmbeddedAttribute(surface, vector, freq))
    concepts = group_by_embedding(embedded, kind=kind) if embedded else []
    # attributes whose descriptors have no embedding stay visible as plain keywords
    for surface, freq in leftovers:
        concepts.append(
            Concept(label=surface, kind="keyword", members=(surface,), frequency=freq)
        )
    return concepts


def _keyword_concepts(corpus: Corpus) -> list[Concept]:
    return [
        Concept(label=token, kind="keyword", members=(token,))
        for token in sorted(corpus.postings)
    ]


def build_summaries(
    corpus: Corpus,
    kb: KnowledgeBase,
    kinds=KINDS,
    wedge_count: int = DEFAULT_WEDGES,
    mention_postings: dict[str, dict[str, set[str]]] | None = None,
) -> SummarySet:
    """Build per-kind concept summaries over the indexed corpus.

    A kind whose lexicon is missing is reported in `errors`; the remaining
    kinds are still produced. An empty corpus yields empty lists, no errors.
    """
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise SummarizeError(f"unknown summary kinds {unknown}")
    result = SummarySet(wedge_count=wedge_count)
    entity_kinds = [k for k in kinds if k in ("person", "organization", "location")]
    if entity_kinds and mention_postings is None and kb.gazetteer is not None:
        if corpus.doc_count:
            _, mention_postings = scan_mentions(corpus, kb.gazetteer)
        else:
            mention_postings = {k: {} for k in entity_kinds}
    for kind in kinds:
        if corpus.doc_count == 0:
            result.kinds[kind] = []
            continue
        try:
            if kind == "topic":
                concepts = _topic_concepts(corpus, kb)
            elif kind == "category":
                concepts = _category_concepts(corpus, kb)
            elif kind == "keyword":
                concepts = _keyword_concepts(corpus)
            else:
                if kb.gazetteer is None:
                    raise KnowledgeError("gazetteer not loaded")
                concepts = _entity_concepts(kind, mention_postings.get(kind, {}), kb)
        except KnowledgeError as exc:
            result.errors[kind] = str(exc)
            continue
        result.kinds[kind] = _finalize_kind(concepts, corpus, wedge_count)
    return result
