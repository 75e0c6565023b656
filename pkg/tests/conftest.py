import pytest
from hypothesis import settings

from rulebench.corpus import Corpus, Document

# property tests share worker machines with the slow acceptance runs; wall
# clock deadlines only produce flakes there
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def toy_corpus() -> Corpus:
    """Three tiny documents with a known tf-idf table."""
    corpus = Corpus()
    corpus.add(Document(doc_id="d1", text="health budget"))
    corpus.add(Document(doc_id="d2", text="health care"))
    corpus.add(Document(doc_id="d3", text="budget cut"))
    return corpus


def build_corpus(texts: dict[str, str]) -> Corpus:
    corpus = Corpus()
    for doc_id in sorted(texts):
        corpus.add(Document(doc_id=doc_id, text=texts[doc_id]))
    return corpus
