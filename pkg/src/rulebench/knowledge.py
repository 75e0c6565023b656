"""File-backed knowledge layer: lexicons, embeddings, string similarity, linking.

Replaces live knowledge-base lookups with local files: a hypernym lexicon
(TSV), a gazetteer of named entities (TSV), a category model (JSON seeds plus
embedding centroids) and a word2vec-format embedding table. All lookups are
immutable after load and safe for concurrent reads.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .corpus import Corpus, preprocess
from .stem import stem

ENTITY_KINDS = ("person", "organization", "location")

METRICS = ("jaccard", "levenshtein_norm", "jaro", "cosine_tfidf", "dice")


class KnowledgeError(Exception):
    """Configuration or lookup failure in the knowledge layer."""


# ------------------------------------------------------------------- lexicons


@dataclass(frozen=True)
class Annotation:
    attribute: str
    descriptor: str
    kind: str


class HypernymLexicon:
    """keyword -> generalized descriptor, loaded from TSV `keyword<TAB>hypernym`."""

    def __init__(self, entries: dict[str, str]):
        self.entries = entries

    @classmethod
    def load(cls, path: str) -> "HypernymLexicon":
        if not os.path.exists(path):
            raise KnowledgeError(f"hypernym lexicon file not found: {path}")
        entries: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                keyword, sep, descriptor = line.partition("\t")
                if not sep or not descriptor.strip():
                    raise KnowledgeError(f"{path}:{lineno}: expected keyword<TAB>hypernym")
                key = keyword.strip().casefold()
                entries.setdefault(key, descriptor.strip())
                entries.setdefault(stem(key), descriptor.strip())
        return cls(entries)

    def lookup(self, attribute: str) -> str | None:
        key = attribute.strip().casefold()
        hit = self.entries.get(key)
        if hit is None:
            hit = self.entries.get(stem(key))
        return hit


class Gazetteer:
    """surface form -> (entity kind, descriptor), loaded from TSV."""

    def __init__(self, entries: dict[str, tuple[str, str]]):
        self.entries = entries  # casefolded surface -> (kind, descriptor)
        self.surfaces = {s: s for s in entries}

    @classmethod
    def load(cls, path: str) -> "Gazetteer":
        if not os.path.exists(path):
            raise KnowledgeError(f"gazetteer file not found: {path}")
        entries: dict[str, tuple[str, str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise KnowledgeError(f"{path}:{lineno}: expected surface<TAB>kind<TAB>descriptor")
                surface, kind, descriptor = (p.strip() for p in parts)
                if kind not in ENTITY_KINDS:
                    raise KnowledgeError(f"{path}:{lineno}: unknown entity kind {kind!r}")
                if not descriptor:
                    raise KnowledgeError(f"{path}:{lineno}: empty descriptor")
                entries[surface.casefold()] = (kind, descriptor)
        return cls(entries)

    def lookup(self, surface: str) -> tuple[str, str] | None:
        return self.entries.get(surface.strip().casefold())

    def surfaces_of_kind(self, kind: str) -> list[str]:
        return sorted(s for s, (k, _) in self.entries.items() if k == kind)


class EmbeddingTable:
    """token -> dense vector, word2vec text format with a `count dim` header."""

    def __init__(self, vectors: dict[str, tuple[float, ...]], dim: int):
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def load(cls, path: str) -> "EmbeddingTable":
        if not os.path.exists(path):
            raise KnowledgeError(f"embedding file not found: {path}")
        vectors: dict[str, tuple[float, ...]] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise KnowledgeError(f"{path}: expected 'count dim' header line")
            dim = int(header[1])
            for lineno, raw in enumerate(fh, start=2):
                parts = raw.split()
                if not parts:
                    continue
                word, coords = parts[0], parts[1:]
                if len(coords) != dim:
                    raise KnowledgeError(
                        f"{path}:{lineno}: vector for {word!r} has {len(coords)} dims, expected {dim}"
                    )
                vectors[word.casefold()] = tuple(float(c) for c in coords)
        return cls(vectors, dim)

    def get(self, token: str) -> tuple[float, ...] | None:
        return self.vectors.get(token.casefold())


def vector_add(a: tuple[float, ...], b: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(x + y for x, y in zip(a, b))


def cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


class CategoryModel:
    """Named categories with seed terms; centroids from the embedding table."""

    def __init__(self, centroids: dict[str, tuple[float, ...]], seeds: dict[str, list[str]]):
        self.centroids = centroids
        self.seeds = seeds

    @classmethod
    def load(cls, path: str, table: EmbeddingTable) -> "CategoryModel":
        if not os.path.exists(path):
            raise KnowledgeError(f"category model file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
        if not isinstance(spec, list):
            raise KnowledgeError(f"{path}: expected a list of {{name, seeds}} objects")
        centroids: dict[str, tuple[float, ...]] = {}
        seeds: dict[str, list[str]] = {}
        for entry in spec:
            name = entry.get("name")
            seed_terms = entry.get("seeds") or []
            if not name or not seed_terms:
                raise KnowledgeError(f"{path}: category entries need 'name' and 'seeds'")
            vectors = [table.get(s) for s in seed_terms]
            vectors = [v for v in vectors if v is not None]
            seeds[name] = list(seed_terms)
            if not vectors:
                continue  # category stays listed but cannot attract attributes
            centroid = tuple(sum(axis) / len(vectors) for axis in zip(*vectors))
            centroids[name] = centroid
        return cls(centroids, seeds)

    def nearest(self, vector: tuple[float, ...]) -> str | None:
        best_name = None
        best_score = -2.0
        for name in sorted(self.centroids):
            score = cosine(vector, self.centroids[name])
            if score > best_score:
                best_name, best_score = name, score
        return best_name


@dataclass
class KnowledgeBase:
    """Bundle of loaded lexicons; any component may be absent."""

    hypernyms: HypernymLexicon | None = None
    gazetteer: Gazetteer | None = None
    categories: CategoryModel | None = None
    embeddings: EmbeddingTable | None = None
    synonyms: HypernymLexicon | None = None

    @classmethod
    def load_dir(cls, directory: str) -> "KnowledgeBase":
        """Load whatever lexicon files exist in a directory by convention:
        hypernyms.tsv, gazetteer.tsv, categories.json, embeddings.txt, synonyms.tsv.
        """
        if not os.path.isdir(directory):
            raise KnowledgeError(f"lexicon directory not found: {directory}")
        kb = cls()
        hyp = os.path.join(directory, "hypernyms.tsv")
        if os.path.exists(hyp):
            kb.hypernyms = HypernymLexicon.load(hyp)
        gaz = os.path.join(directory, "gazetteer.tsv")
        if os.path.exists(gaz):
            kb.gazetteer = Gazetteer.load(gaz)
        emb = os.path.join(directory, "embeddings.txt")
        if os.path.exists(emb):
            kb.embeddings = EmbeddingTable.load(emb)
        cat = os.path.join(directory, "categories.json")
        if os.path.exists(cat):
            if kb.embeddings is None:
                raise KnowledgeError("categories.json requires embeddings.txt for centroids")
            kb.categories = CategoryModel.load(cat, kb.embeddings)
        syn = os.path.join(directory, "synonyms.tsv")
        if os.path.exists(syn):
            kb.synonyms = HypernymLexicon.load(syn)
        return kb

    def annotate_attribute(self, attribute: str, kind: str) -> Annotation | None:
        return annotate_attribute(attribute, kind, self)


def annotate_attribute(attribute: str, kind: str, kb: KnowledgeBase) -> Annotation | None:
    """Describe an attribute with a lexicon descriptor, or nothing when unknown.

    topic -> hypernym lexicon; category -> nearest category by embedding
    cosine; person/organization/location -> gazetteer descriptor. When kinds
    conflict for the same surface, gazetteer wins over hypernym over category.
    """
    if kind in ENTITY_KINDS:
        if kb.gazetteer is None:
            raise KnowledgeError("gazetteer not loaded")
        hit = kb.gazetteer.lookup(attribute)
        if hit is None or hit[0] != kind:
            return None
        return Annotation(attribute=attribute, descriptor=hit[1], kind=kind)
    if kind == "topic":
        if kb.hypernyms is None:
            raise KnowledgeError("hypernym lexicon not loaded")
        descriptor = kb.hypernyms.lookup(attribute)
        if descriptor is None:
            return None
        return Annotation(attribute=attribute, descriptor=descriptor, kind="topic")
    if kind == "category":
        if kb.categories is None or kb.embeddings is None:
            raise KnowledgeError("category model not loaded")
        vector = kb.embeddings.get(attribute)
        if vector is None:
            return None
        name = kb.categories.nearest(vector)
        if name is None:
            return None
        return Annotation(attribute=attribute, descriptor=name, kind="category")
    raise KnowledgeError(f"unknown annotation kind {kind!r}")


# ---------------------------------------------------------- string similarity


def _tokens(s: str) -> list[str]:
    return s.casefold().split()


def _bigrams(s: str) -> list[str]:
    s = s.casefold()
    return [s[i : i + 2] for i in range(len(s) - 1)]


def _jaccard(a: str, b: str) -> float:
    ta, tb = set(_tokens(a)), set(_tokens(b))
    if not ta and not tb:
        return 1.0
    union = ta | tb
    return len(ta & tb) / len(union) if union else 0.0


def _dice(a: str, b: str) -> float:
    ba, bb = _bigrams(a), _bigrams(b)
    if not ba and not bb:
        return 1.0 if a.casefold() == b.casefold() else 0.0
    if not ba or not bb:
        return 0.0
    ca: dict[str, int] = {}
    for g in ba:
        ca[g] = ca.get(g, 0) + 1
    overlap = 0
    for g in bb:
        if ca.get(g, 0) > 0:
            ca[g] -= 1
            overlap += 1
    return 2.0 * overlap / (len(ba) + len(bb))


def _cosine_tokens(a: str, b: str) -> float:
    ca: dict[str, int] = {}
    cb: dict[str, int] = {}
    for t in _tokens(a):
        ca[t] = ca.get(t, 0) + 1
    for t in _tokens(b):
        cb[t] = cb.get(t, 0) + 1
    if not ca or not cb:
        return 1.0 if not ca and not cb else 0.0
    dot = sum(ca[t] * cb.get(t, 0) for t in ca)
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    return dot / (na * nb)


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def _levenshtein_norm(a: str, b: str) -> float:
    a, b = a.casefold(), b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - _levenshtein(a, b) / longest


def _jaro(a: str, b: str) -> float:
    """Jaro similarity with the Winkler common-prefix boost.

    Matches what linking toolkits commonly ship under the name "jaro": the
    classic Jaro score plus 0.1 per shared leading character (capped at 4),
    on casefolded strings. "M. Turnbull" vs "Malcolm Turnbull" scores ~0.74.
    """
    a, b = a.casefold(), b.casefold()
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(0, max(len(a), len(b)) // 2 - 1)
    b_matched = [False] * len(b)
    a_hits: list[str] = []
    b_hit_at: list[int] = []
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(len(b), i + window + 1)
        for j in range(lo, hi):
            if not b_matched[j] and b[j] == ch:
                b_matched[j] = True
                a_hits.append(ch)
                b_hit_at.append(j)
                break
    m = len(a_hits)
    if m == 0:
        return 0.0
    b_hits = [b[j] for j in sorted(b_hit_at)]
    transpositions = sum(x != y for x, y in zip(a_hits, b_hits)) // 2
    score = (m / len(a) + m / len(b) + (m - transpositions) / m) / 3.0
    prefix = 0
    for x, y in zip(a, b):
        if x != y or prefix == 4:
            break
        prefix += 1
    return score + prefix * 0.1 * (1.0 - score)


_METRIC_FNS = {
    "jaccard": _jaccard,
    "levenshtein_norm": _levenshtein_norm,
    "jaro": _jaro,
    "cosine_tfidf": _cosine_tokens,
    "dice": _dice,
}


def string_similarity(a: str, b: str, metric: str) -> float:
    """Similarity in [0, 1]; 1.0 exactly when the strings are casefold-equal."""
    if metric not in _METRIC_FNS:
        raise KnowledgeError(f"unknown similarity metric {metric!r}")
    if not a or not b:
        raise KnowledgeError("similarity inputs must be non-empty")
    if a.casefold() == b.casefold():
        return 1.0
    score = _METRIC_FNS[metric](a, b)
    return min(1.0, max(0.0, score))


@dataclass(frozen=True)
class LinkResult:
    surface: str
    kind: str
    descriptor: str
    score: float


def link_entity(
    mention: str,
    gazetteer: Gazetteer,
    metrics: list[str],
    threshold: float,
) -> LinkResult | None:
    """Link a mention to the gazetteer entry with the best mean metric score.

    Returns nothing when the best mean is below the threshold. Ties break by
    lexicographic surface form.
    """
    if not metrics:
        raise KnowledgeError("at least one similarity metric required")
    if not gazetteer.entries:
        raise KnowledgeError("gazetteer is empty")
    best: LinkResult | None = None
    for surface in sorted(gazetteer.entries):
        mean = sum(string_similarity(mention, surface, m) for m in metrics) / len(metrics)
        if best is None or mean > best.score:
            kind, descriptor = gazetteer.entries[surface]
            best = LinkResult(surface=surface, kind=kind, descriptor=descriptor, score=mean)
    if best is not None and best.score >= threshold:
        return best
    return None


# ------------------------------------------------------------ mention scanning


def scan_mentions(corpus: Corpus, gazetteer: Gazetteer) -> tuple[dict, dict]:
    """Find gazetteer surfaces in raw document text.

    Returns (per_doc, postings): per_doc maps doc id -> {kind: frozenset of
    surfaces}; postings maps kind -> {surface: set of doc ids}. Matching is
    case-insensitive on whitespace-token boundaries.
    """
    by_length: dict[int, dict[tuple[str, ...], str]] = {}
    for surface in gazetteer.entries:
        parts = tuple(surface.split())
        by_length.setdefault(len(parts), {})[parts] = surface
    per_doc: dict[str, dict[str, frozenset]] = {}
    postings: dict[str, dict[str, set[str]]] = {k: {} for k in ENTITY_KINDS}
    for doc_id in sorted(corpus.docs):
        words = [w.strip(".,;:!?'\"()[]") for w in corpus.docs[doc_id].text.casefold().split()]
        words = [w for w in words if w]
        found: dict[str, set[str]] = {}
        for length, surface_map in by_length.items():
            if length <= 0 or len(words) < length:
                continue
            for i in range(len(words) - length + 1):
                window = tuple(words[i : i + length])
                surface = surface_map.get(window)
                if surface is not None:
                    kind, _ = gazetteer.entries[surface]
                    found.setdefault(kind, set()).add(surface)
                    postings[kind].setdefault(surface, set()).add(doc_id)
        if found:
            per_doc[doc_id] = {k: frozenset(v) for k, v in found.items()}
    return per_doc, postings


def embed_text(text: str, table: EmbeddingTable) -> tuple[float, ...] | None:
    """Sum of embeddings of the text's content tokens; None if all are OOV.

    Tokens are lowercased and stopword-filtered but not stemmed, since the
    embedding vocabulary holds surface forms.
    """
    from .corpus import _DEFAULT_STOPWORDS

    view = preprocess(text)
    total: tuple[float, ...] | None = None
    for token in view.raw_terms:
        if token in _DEFAULT_STOPWORDS:
            continue
        vec = table.get(token)
        if vec is None:
            continue
        total = vec if total is None else vector_add(total, vec)
    return total
