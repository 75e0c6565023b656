"""Document store: ingestion, preprocessing and a TF-IDF inverted index."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources

from .stem import stem

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_TOKEN_RE = re.compile(r"[#@]?[a-z0-9']+")


class CorpusError(Exception):
    """Raised for malformed input or inconsistent corpus operations."""


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Load the stopword list, either the bundled English one or a file."""
    if path is None:
        text = resources.files("rulebench.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


_DEFAULT_STOPWORDS = load_stopwords()


def load_lemmas(path: str) -> dict[str, str]:
    """Load an optional lemma lexicon: TSV lines `surface<TAB>lemma`."""
    lemmas: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            surface, _, lemma = line.partition("\t")
            if lemma:
                lemmas[surface.casefold()] = lemma.casefold()
    return lemmas


@dataclass(frozen=True)
class TokenView:
    """Preprocessed view of one text: stemmed tokens, hashtags, raw surface forms."""

    tokens: tuple[str, ...]
    hashtags: tuple[str, ...]
    raw_terms: tuple[str, ...]

    @property
    def token_set(self) -> frozenset[str]:
        return frozenset(self.tokens)


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    created_at: str | None = None
    meta: dict = field(default_factory=dict)


def preprocess(
    text: str,
    stopwords: frozenset[str] | None = None,
    lemmas: dict[str, str] | None = None,
) -> TokenView:
    """Tokenize, normalize and de-noise a text.

    Lowercases, strips URLs and non-word noise (emoji, punctuation runs),
    removes stopwords, and stems the survivors. Hashtags are collected
    separately with the leading `#` removed; `@mentions` are dropped as noise.
    When a lemma lexicon is supplied, lemma lookup wins over stemming.
    """
    if stopwords is None:
        stopwords = _DEFAULT_STOPWORDS
    lowered = _URL_RE.sub(" ", text.casefold())
    tokens: list[str] = []
    hashtags: list[str] = []
    raw_terms: list[str] = []
    for match in _TOKEN_RE.finditer(lowered):
        term = match.group()
        if term.startswith("#"):
            tag = term[1:].strip("'")
            if tag:
                hashtags.append(tag)
            continue
        if term.startswith("@"):
            continue
        term = term.strip("'")
        if not term:
            continue
        raw_terms.append(term)
        if term in stopwords:
            continue
        if lemmas is not None and term in lemmas:
            tokens.append(lemmas[term])
        else:
            tokens.append(stem(term))
    return TokenView(tokens=tuple(tokens), hashtags=tuple(hashtags), raw_terms=tuple(raw_terms))


@dataclass
class IndexStats:
    doc_count: int
    df: dict[str, int]

    def term_count(self) -> int:
        return len(self.df)


class Corpus:
    """In-memory document collection with an inverted index.

    Ingestion is single-writer; once ingested the index is treated as
    immutable and is safe for concurrent reads.
    """

    def __init__(
        self,
        stopwords: frozenset[str] | None = None,
        lemmas: dict[str, str] | None = None,
    ) -> None:
        self.stopwords = stopwords if stopwords is not None else _DEFAULT_STOPWORDS
        self.lemmas = lemmas
        self.docs: dict[str, Document] = {}
        self.views: dict[str, TokenView] = {}
        self.postings: dict[str, set[str]] = {}
        self.raw_postings: dict[str, set[str]] = {}
        self.hashtag_postings: dict[str, set[str]] = {}
        self._tf: dict[str, dict[str, int]] = {}
        self._norms: dict[str, float] = {}
        self._phrase_df: dict[tuple[str, ...], int] = {}
        self._mean_tfidf: dict[str, float] = {}

    # ------------------------------------------------------------------ ingest

    def add(self, doc: Document) -> None:
        if not doc.text:
            raise CorpusError(f"document {doc.doc_id!r} has empty text")
        if doc.doc_id in self.docs:
            raise CorpusError(f"duplicate document id {doc.doc_id!r}")
        view = preprocess(doc.text, self.stopwords, self.lemmas)
        self.docs[doc.doc_id] = doc
        self.views[doc.doc_id] = view
        for tok in view.tokens:
            self.postings.setdefault(tok, set()).add(doc.doc_id)
            per_doc = self._tf.setdefault(tok, {})
            per_doc[doc.doc_id] = per_doc.get(doc.doc_id, 0) + 1
        for term in view.raw_terms:
            self.raw_postings.setdefault(term, set()).add(doc.doc_id)
        for tag in view.hashtags:
            self.hashtag_postings.setdefault(tag, set()).add(doc.doc_id)
        self._norms.clear()
        self._phrase_df.clear()
        self._mean_tfidf.clear()

    def ingest_lines(self, lines) -> tuple[int, list[str]]:
        """Ingest JSON-lines records with `id` and `text` fields.

        Returns (added_count, warnings). Re-ingesting a record identical to a
        stored one is a warning, not an error. A record whose id collides with
        a stored document but whose text differs is a conflict.
        """
        added = 0
        warnings: list[str] = []
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or "id" not in record:
                raise CorpusError(f"line {lineno}: record missing 'id'")
            if "text" not in record or not isinstance(record["text"], str) or not record["text"]:
                raise CorpusError(f"line {lineno}: record missing 'text'")
            doc_id = str(record["id"])
            existing = self.docs.get(doc_id)
            if existing is not None:
                if existing.text == record["text"]:
                    warnings.append(f"line {lineno}: document {doc_id!r} already ingested, skipped")
                    continue
                raise CorpusError(f"line {lineno}: duplicate document id {doc_id!r}")
            self.add(
                Document(
                    doc_id=doc_id,
                    text=record["text"],
                    created_at=record.get("created_at"),
                    meta=record.get("meta") or {},
                )
            )
            added += 1
        return added, warnings

    def ingest_file(self, path: str) -> tuple[int, list[str]]:
        with open(path, encoding="utf-8") as fh:
            return self.ingest_lines(fh)

    # ------------------------------------------------------------------- stats

    @property
    def doc_count(self) -> int:
        return len(self.docs)

    def stats(self) -> IndexStats:
        return IndexStats(
            doc_count=self.doc_count,
            df={term: len(ids) for term, ids in self.postings.items()},
        )

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc_id: str) -> int:
        return self._tf.get(term, {}).get(doc_id, 0)

    def _normalize_term(self, term: str) -> tuple[str, ...]:
        """Map a raw attribute (possibly multi-word) onto index terms."""
        view = preprocess(term, self.stopwords, self.lemmas)
        return view.tokens

    def _phrase_tf(self, parts: tuple[str, ...], doc_id: str) -> int:
        tokens = self.views[doc_id].tokens
        n = len(parts)
        if n == 0 or len(tokens) < n:
            return 0
        return sum(1 for i in range(len(tokens) - n + 1) if tokens[i : i + n] == parts)

    def _phrase_df_count(self, parts: tuple[str, ...]) -> int:
        if parts in self._phrase_df:
            return self._phrase_df[parts]
        candidates = None
        for part in parts:
            ids = self.postings.get(part, set())
            candidates = ids if candidates is None else candidates & ids
            if not candidates:
                break
        count = 0
        for doc_id in candidates or ():
            if self._phrase_tf(parts, doc_id) > 0:
                count += 1
        self._phrase_df[parts] = count
        return count

    def tfidf(self, term: str, doc_id: str) -> float:
        """Raw tf times ln(N/df); 0 when the term misses the document."""
        if doc_id not in self.docs:
            raise CorpusError(f"unknown document id {doc_id!r}")
        parts = self._normalize_term(term)
        if not parts:
            return 0.0
        if len(parts) == 1:
            tok = parts[0]
            tf = self.tf(tok, doc_id)
            df = self.df(tok)
        else:
            tf = self._phrase_tf(parts, doc_id)
            df = self._phrase_df_count(parts)
        if tf == 0 or df == 0:
            return 0.0
        return tf * math.log(self.doc_count / df)

    def containing_docs(self, term: str) -> set[str]:
        """Ids of documents whose token stream contains the attribute."""
        parts = self._normalize_term(term)
        if not parts:
            return set()
        if len(parts) == 1:
            return set(self.postings.get(parts[0], ()))
        candidates: set[str] | None = None
        for part in parts:
            ids = self.postings.get(part, set())
            candidates = ids if candidates is None else candidates & ids
            if not candidates:
                return set()
        return {d for d in candidates or () if self._phrase_tf(parts, d) > 0}

    def mean_tfidf(self, term: str) -> float:
        """Average tf-idf of the attribute over the documents containing it."""
        if term in self._mean_tfidf:
            return self._mean_tfidf[term]
        docs = self.containing_docs(term)
        value = sum(self.tfidf(term, d) for d in docs) / len(docs) if docs else 0.0
        self._mean_tfidf[term] = value
        return value

    def doc_norm(self, doc_id: str) -> float:
        """Euclidean norm of the document's unigram tf-idf vector."""
        if doc_id in self._norms:
            return self._norms[doc_id]
        if doc_id not in self.docs:
            raise CorpusError(f"unknown document id {doc_id!r}")
        total = 0.0
        n = self.doc_count
        for tok in set(self.views[doc_id].tokens):
            df = self.df(tok)
            if df == 0:
                continue
            weight = self.tf(tok, doc_id) * math.log(n / df)
            total += weight * weight
        norm = math.sqrt(total)
        self._norms[doc_id] = norm
        return norm

    def view(self, doc_id: str) -> TokenView:
        if doc_id not in self.views:
            raise CorpusError(f"unknown document id {doc_id!r}")
        return self.views[doc_id]

    def all_ids(self) -> set[str]:
        return set(self.docs)


def load_labels(path: str) -> dict[str, dict[str, bool]]:
    """Ground-truth labels: JSONL of {id, tag, relevant} -> {id: {tag: bool}}."""
    with open(path, encoding="utf-8") as fh:
        return parse_labels_lines(fh)


def parse_labels_lines(lines) -> dict[str, dict[str, bool]]:
    labels: dict[str, dict[str, bool]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        for key in ("id", "tag", "relevant"):
            if key not in record:
                raise CorpusError(f"line {lineno}: label missing {key!r}")
        labels.setdefault(str(record["id"]), {})[str(record["tag"])] = bool(record["relevant"])
    return labels
