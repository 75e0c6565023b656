"""Descriptor grouping, embedding grouping, and corpus-level concept summaries."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import build_corpus
from oracles.brute import embedding_groups_oracle, group_attributes_oracle
from rulebench.corpus import Corpus
from rulebench.knowledge import Annotation, KnowledgeBase
from rulebench.summarize import (
    Concept,
    EmbeddedAttribute,
    SummarizeError,
    build_summaries,
    check_user_weight,
    embed_annotation,
    group_by_embedding,
    summarize_features,
)

LEXICON = {"fund": "Economy", "budget": "Economy", "illness": "Health", "disease": "Health"}


@pytest.fixture
def kb(tmp_path) -> KnowledgeBase:
    (tmp_path / "hypernyms.tsv").write_text(
        "doctor\tmedical_practitioner\n"
        "budget\tpublic_spending\n"
        "fund\tpublic_spending\n",
        encoding="utf-8",
    )
    (tmp_path / "gazetteer.tsv").write_text(
        "greg hunt\tperson\tHealth Minister of Australia\n"
        "canberra\tlocation\tcapital region\n",
        encoding="utf-8",
    )
    (tmp_path / "embeddings.txt").write_text(
        "6 3\n"
        "fund 1.0 0.1 0.0\n"
        "budget 0.9 0.2 0.0\n"
        "illness 0.0 0.1 1.0\n"
        "disease 0.0 0.2 0.9\n"
        "minister 0.5 0.5 0.0\n"
        "capital 0.0 1.0 0.0\n",
        encoding="utf-8",
    )
    (tmp_path / "categories.json").write_text(
        '[{"name": "Economy", "seeds": ["fund", "budget"]},'
        ' {"name": "Health", "seeds": ["illness", "disease"]}]',
        encoding="utf-8",
    )
    return KnowledgeBase.load_dir(str(tmp_path))


@pytest.fixture
def corpus() -> Corpus:
    return build_corpus(
        {
            "d1": "doctor fund budget",
            "d2": "doctor illness treatment",
            "d3": "Greg Hunt budget cut",
            "d4": "visiting Canberra doctor",
        }
    )


class TestConceptValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(SummarizeError, match="kind"):
            Concept(label="x", kind="flavor", members=("a",))

    def test_empty_members_rejected(self):
        with pytest.raises(SummarizeError, match="no members"):
            Concept(label="x", kind="topic", members=())

    def test_duplicate_members_rejected(self):
        with pytest.raises(SummarizeError, match="duplicate"):
            Concept(label="x", kind="topic", members=("a", "a"))

    def test_negative_weight_rejected(self):
        with pytest.raises(SummarizeError, match="negative"):
            Concept(label="x", kind="topic", members=("a",), weight=-1.0)

    def test_dict_round_trip(self):
        concept = Concept(
            label="Economy", kind="category", members=("fund", "budget"), weight=2.5
        )
        concept.frequency = 7
        concept.relevancy = 0.5
        assert Concept.from_dict(concept.to_dict()) == concept


def test_user_weight_bounds():
    assert check_user_weight(0) == 0.0
    assert check_user_weight(10) == 10.0
    with pytest.raises(SummarizeError):
        check_user_weight(-0.1)
    with pytest.raises(SummarizeError):
        check_user_weight(10.5)


def test_attributes_group_under_shared_descriptors():
    groups = summarize_features(["fund", "illness", "budget", "disease"], LEXICON.get)
    assert groups == {"Economy": ["fund", "budget"], "Health": ["illness", "disease"]}


def test_unmapped_attribute_forms_its_own_group():
    groups = summarize_features(["fund", "zebra"], LEXICON.get)
    assert groups == {"Economy": ["fund"], "zebra": ["zebra"]}


def test_duplicates_fold_before_grouping():
    groups = summarize_features(["fund", "fund", "budget"], LEXICON.get)
    assert groups == {"Economy": ["fund", "budget"]}


def test_empty_attribute_list_rejected():
    with pytest.raises(SummarizeError):
        summarize_features([], LEXICON.get)


@given(
    st.lists(st.sampled_from("abcdef"), min_size=1, max_size=12),
    st.dictionaries(st.sampled_from("abcdef"), st.sampled_from(["X", "Y"]), max_size=6),
)
def test_grouping_partitions_input_and_matches_oracle(attrs, table):
    groups = summarize_features(attrs, table.get)
    flattened = [a for members in groups.values() for a in members]
    assert sorted(flattened) == sorted(set(attrs))
    assert groups == group_attributes_oracle(attrs, table.get)


class TestEmbeddingGroups:
    def test_identical_vectors_share_one_group(self):
        items = [
            EmbeddedAttribute("a", (1.0, 0.0), 5),
            EmbeddedAttribute("b", (2.0, 0.0), 3),
        ]
        groups = group_by_embedding(items)
        assert len(groups) == 1
        assert groups[0].label == "a"
        assert groups[0].members == ("a", "b")
        assert groups[0].frequency == 8

    def test_orthogonal_vectors_stay_apart(self):
        items = [
            EmbeddedAttribute("a", (1.0, 0.0), 5),
            EmbeddedAttribute("b", (0.0, 1.0), 3),
        ]
        assert [g.label for g in group_by_embedding(items)] == ["a", "b"]

    def test_default_threshold_splits_on_similarity(self):
        # cos((1,0),(1,1)) ~ 0.707 joins; cos((1,0),(1,2)) ~ 0.447 does not
        close = [EmbeddedAttribute("a", (1.0, 0.0), 2), EmbeddedAttribute("b", (1.0, 1.0), 1)]
        far = [EmbeddedAttribute("a", (1.0, 0.0), 2), EmbeddedAttribute("c", (1.0, 2.0), 1)]
        assert len(group_by_embedding(close)) == 1
        assert len(group_by_embedding(far)) == 2

    def test_mixed_dimensions_rejected(self):
        items = [EmbeddedAttribute("a", (1.0,), 1), EmbeddedAttribute("b", (0.0, 1.0), 1)]
        with pytest.raises(SummarizeError, match="dimension"):
            group_by_embedding(items)

    @given(
        st.dictionaries(
            st.sampled_from("abcdefgh"),
            st.tuples(
                st.lists(st.integers(-3, 3), min_size=3, max_size=3),
                st.integers(0, 9),
            ),
            min_size=1,
            max_size=8,
        ),
        st.sampled_from([0.0, 0.3, 0.5, 0.7, 0.9, 1.0]),
    )
    def test_grouping_matches_greedy_oracle(self, table, threshold):
        items = [
            EmbeddedAttribute(name, tuple(float(x) for x in vec), freq)
            for name, (vec, freq) in sorted(table.items())
        ]
        got = group_by_embedding(items, threshold=threshold)
        expected = embedding_groups_oracle(
            [(e.attribute, list(e.vector), e.frequency) for e in items], threshold
        )
        assert [list(c.members) for c in got] == expected


def test_descriptor_embedding_sums_content_tokens(kb):
    annotation = Annotation(attribute="x", descriptor="fund budget", kind="topic")
    assert embed_annotation(annotation, kb.embeddings) == pytest.approx((1.9, 0.3, 0.0))
    oov = Annotation(attribute="x", descriptor="zzqqy", kind="topic")
    assert embed_annotation(oov, kb.embeddings) is None


class TestBuildSummaries:
    def test_empty_corpus_yields_empty_kinds_without_errors(self, kb):
        summary = build_summaries(Corpus(), kb)
        assert all(v == [] for v in summary.kinds.values())
        assert summary.errors == {}

    def test_unknown_kind_rejected(self, corpus, kb):
        with pytest.raises(SummarizeError, match="unknown summary kinds"):
            build_summaries(corpus, kb, kinds=("vegetable",))

    def test_topics_group_by_hypernym_and_scale_relevancy(self, corpus, kb):
        summary = build_summaries(corpus, kb, kinds=("topic",))
        topics = summary.kinds["topic"]
        assert [c.label for c in topics] == ["medical_practitioner", "public_spending"]
        assert topics[0].members == ("doctor",)
        assert topics[1].members == ("budget", "fund")
        assert topics[0].frequency == 3
        assert topics[1].frequency == 2
        assert topics[0].relevancy == 1.0
        assert topics[1].relevancy == pytest.approx(2 / 3)
        assert all(c.weight > 0 for c in topics)

    def test_categories_use_embedding_centroids(self, corpus, kb):
        summary = build_summaries(corpus, kb, kinds=("category",))
        categories = summary.kinds["category"]
        assert [c.label for c in categories] == ["Economy", "Health"]
        assert categories[0].members == ("budget", "fund")
        assert categories[1].members == ("illness",)
        assert [c.frequency for c in categories] == [2, 1]
        assert categories[1].relevancy == 0.5

    def test_entities_come_from_mention_scanning(self, corpus, kb):
        summary = build_summaries(corpus, kb, kinds=("person", "organization", "location"))
        people = summary.kinds["person"]
        assert len(people) == 1
        assert people[0].label == "greg hunt"
        assert people[0].kind == "person"
        assert people[0].frequency == 1
        assert summary.kinds["location"][0].label == "canberra"
        assert summary.kinds["organization"] == []

    def test_wedge_budget_truncates_to_most_frequent(self, corpus, kb):
        summary = build_summaries(corpus, kb, kinds=("keyword",), wedge_count=2)
        keywords = summary.kinds["keyword"]
        assert [c.label for c in keywords] == ["doctor", "budget"]
        assert [c.frequency for c in keywords] == [3, 2]

    def test_missing_lexicons_reported_per_kind(self, corpus):
        bare = KnowledgeBase()
        summary = build_summaries(corpus, bare, kinds=("topic", "person", "keyword"))
        assert "hypernym" in summary.errors["topic"]
        assert "gazetteer" in summary.errors["person"]
        assert "topic" not in summary.kinds
        assert len(summary.kinds["keyword"]) > 0

    def test_serialized_summary_keeps_order_and_fields(self, corpus, kb):
        raw = build_summaries(corpus, kb, kinds=("topic",)).to_dict()
        assert raw["wedge_count"] == 50
        labels = [c["label"] for c in raw["kinds"]["topic"]]
        assert labels == ["medical_practitioner", "public_spending"]
        assert set(raw["kinds"]["topic"][0]) == {
            "label", "kind", "members", "weight", "frequency", "relevancy",
        }
