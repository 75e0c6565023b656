"""Weighted concept ranking and boolean concept-rule filtering."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import build_corpus
from oracles.brute import rank_oracle
from rulebench.rank import (
    Preference,
    RankError,
    concept_queries,
    eval_concept_rule,
    parse_concept_expr,
    rank,
    score_document,
)
from rulebench.summarize import Concept


def concept(label: str, members, weight: float = 1.0) -> Concept:
    return Concept(label=label, kind="keyword", members=tuple(members), weight=weight)


@pytest.fixture
def preference() -> Preference:
    return Preference(
        concepts=[
            concept("Health", ("health", "care"), weight=2.0),
            concept("Money", ("budget", "cut"), weight=1.0),
        ]
    )


class TestPreference:
    def test_needs_at_least_one_concept(self):
        with pytest.raises(RankError):
            Preference(concepts=[])

    def test_labels_must_be_distinct(self):
        with pytest.raises(RankError, match="distinct"):
            Preference(concepts=[concept("A", ("x",)), concept("A", ("y",))])

    def test_weights_must_be_positive(self):
        with pytest.raises(RankError, match="positive weight"):
            Preference(concepts=[concept("A", ("x",), weight=0.0)])


def test_queries_are_the_cartesian_member_product(preference):
    queries = concept_queries(preference)
    assert queries == [
        ("health", "budget"),
        ("health", "cut"),
        ("care", "budget"),
        ("care", "cut"),
    ]
    single = Preference(concepts=[concept("A", ("x",))])
    assert concept_queries(single) == [("x",)]


class TestScoreDocument:
    def test_best_expansion_wins_and_parts_are_reported(self, toy_corpus, preference):
        score, contributions = score_document(toy_corpus, "d1", preference)
        # d1 holds health and budget only; the ratio cancels the tf-idf scale
        assert score == pytest.approx(1.5)
        assert contributions == {
            "Health": pytest.approx(1.0),
            "Money": pytest.approx(0.5),
        }

    def test_contributions_sum_to_the_score(self, toy_corpus, preference):
        for doc_id in sorted(toy_corpus.docs):
            score, contributions = score_document(toy_corpus, doc_id, preference)
            assert sum(contributions.values()) == pytest.approx(score)

    def test_document_without_any_member_scores_zero(self, toy_corpus):
        pref = Preference(concepts=[concept("A", ("doctor",))])
        score, contributions = score_document(toy_corpus, "d1", pref)
        assert score == 0.0
        assert contributions == {}

    def test_unknown_document_rejected(self, toy_corpus, preference):
        with pytest.raises(RankError, match="unknown document"):
            score_document(toy_corpus, "nope", preference)


class TestRank:
    def test_orders_documents_by_best_expansion(self, toy_corpus, preference):
        items = rank(preference, toy_corpus, top_n=10)
        assert [i.doc_id for i in items] == ["d1", "d2", "d3"]
        assert items[0].score > items[1].score > items[2].score
        assert rank(preference, toy_corpus, top_n=1)[0].doc_id == "d1"

    def test_agrees_with_the_exhaustive_oracle(self, toy_corpus, preference):
        doc_tokens = {d: list(toy_corpus.views[d].tokens) for d in toy_corpus.docs}
        expected = rank_oracle(
            doc_tokens, [(list(c.members), c.weight) for c in preference.concepts], 10
        )
        got = rank(preference, toy_corpus, top_n=10)
        assert [i.doc_id for i in got] == [d for d, _ in expected]
        for item, (_, score) in zip(got, expected):
            assert item.score == pytest.approx(score, abs=1e-9)

    def test_zero_scores_drop_out(self, toy_corpus):
        pref = Preference(concepts=[concept("A", ("doctor",))])
        assert rank(pref, toy_corpus, top_n=5) == []

    def test_tied_scores_order_by_doc_id(self):
        corpus = build_corpus({"a": "health budget", "b": "health budget", "c": "road"})
        pref = Preference(concepts=[concept("H", ("health",))])
        items = rank(pref, corpus, top_n=5)
        assert [i.doc_id for i in items] == ["a", "b"]
        assert items[0].score == pytest.approx(items[1].score)

    def test_disjoint_concept_scores_never_exceed_the_largest_weight(
        self, toy_corpus, preference
    ):
        for item in rank(preference, toy_corpus, top_n=10):
            assert item.score <= 2.0 + 1e-12

    def test_top_n_must_be_positive(self, toy_corpus, preference):
        with pytest.raises(RankError):
            rank(preference, toy_corpus, top_n=0)

    def test_doubling_every_weight_doubles_scores_and_keeps_order(
        self, toy_corpus, preference
    ):
        doubled = Preference(
            concepts=[
                concept(c.label, c.members, weight=2 * c.weight)
                for c in preference.concepts
            ]
        )
        base = rank(preference, toy_corpus, top_n=10)
        scaled = rank(doubled, toy_corpus, top_n=10)
        assert [i.doc_id for i in base] == [i.doc_id for i in scaled]
        for one, two in zip(base, scaled):
            assert two.score == pytest.approx(2 * one.score)

    @given(
        st.dictionaries(
            st.sampled_from(["d1", "d2", "d3", "d4"]),
            st.lists(
                st.sampled_from(["health", "budget", "care", "cut", "fund", "doctor"]),
                min_size=1,
                max_size=5,
            ).map(" ".join),
            min_size=1,
            max_size=4,
        ),
        st.dictionaries(
            st.sampled_from(["A", "B", "C"]),
            st.tuples(
                st.sets(
                    st.sampled_from(["health", "budget", "care", "cut", "fund"]),
                    min_size=1,
                    max_size=3,
                ),
                st.integers(1, 5),
            ),
            min_size=1,
            max_size=3,
        ),
    )
    def test_random_preferences_match_the_oracle(self, texts, spec):
        corpus = build_corpus(texts)
        pref = Preference(
            concepts=[
                concept(label, sorted(members), weight=float(weight))
                for label, (members, weight) in sorted(spec.items())
            ]
        )
        doc_tokens = {d: list(corpus.views[d].tokens) for d in sorted(corpus.docs)}
        expected = rank_oracle(
            doc_tokens, [(list(c.members), c.weight) for c in pref.concepts], 10
        )
        got = rank(pref, corpus, top_n=10)
        assert [i.doc_id for i in got] == [d for d, _ in expected]
        for item, (_, score) in zip(got, expected):
            assert item.score == pytest.approx(score, abs=1e-9)
            assert sum(item.contributions.values()) == pytest.approx(item.score)


class TestConceptExpr:
    def test_and_binds_tighter_than_or(self):
        expr = parse_concept_expr("A OR B AND C")
        assert expr == ("or", [("name", "A"), ("and", [("name", "B"), ("name", "C")])])

    def test_brackets_group_explicitly(self):
        expr = parse_concept_expr("[A OR B] AND C")
        assert expr == ("and", [("or", [("name", "A"), ("name", "B")]), ("name", "C")])

    def test_lowercase_operators_accepted(self):
        assert parse_concept_expr("A and B") == ("and", [("name", "A"), ("name", "B")])

    @pytest.mark.parametrize(
        "text,message",
        [
            ("", "empty"),
            ("A &", "unexpected character"),
            ("[A OR B C", "expected ']'"),
            ("[A OR B", "ended unexpectedly"),
            ("A OR", "ended unexpectedly"),
            ("A B", "unexpected token"),
            ("AND A", "expected a concept name"),
        ],
    )
    def test_malformed_rules_report_what_went_wrong(self, text, message):
        with pytest.raises(RankError, match=message):
            parse_concept_expr(text)


CONCEPTS = {
    "Health": Concept(
        label="Health", kind="keyword", members=("health", "care"), weight=2.0
    ),
    "Money": Concept(label="Money", kind="keyword", members=("budget", "cut"), weight=1.0),
    "Free": Concept(label="Free", kind="keyword", members=("cut",)),
}


class TestConceptRule:
    def test_single_name_filters_to_docs_holding_a_member(self, toy_corpus):
        items = eval_concept_rule("Health", CONCEPTS, toy_corpus, top_n=10)
        assert [i.doc_id for i in items] == ["d2", "d1"]

    def test_and_requires_every_clause(self, toy_corpus):
        items = eval_concept_rule("Health AND Money", CONCEPTS, toy_corpus, top_n=10)
        assert [i.doc_id for i in items] == ["d1"]
        for item in items:
            has_health = any(
                item.doc_id in toy_corpus.containing_docs(m)
                for m in CONCEPTS["Health"].members
            )
            has_money = any(
                item.doc_id in toy_corpus.containing_docs(m)
                for m in CONCEPTS["Money"].members
            )
            assert has_health and has_money

    def test_or_admits_the_second_clause(self, toy_corpus):
        items = eval_concept_rule(
            "[Health AND Money] OR Free", CONCEPTS, toy_corpus, top_n=10
        )
        assert {i.doc_id for i in items} == {"d1", "d3"}

    def test_survivors_all_satisfy_the_rule(self, toy_corpus):
        items = eval_concept_rule("Health OR Money", CONCEPTS, toy_corpus, top_n=10)
        for item in items:
            members = CONCEPTS["Health"].members + CONCEPTS["Money"].members
            assert any(item.doc_id in toy_corpus.containing_docs(m) for m in members)
        assert len(items) == 3

    def test_weightless_concepts_rank_with_unit_weight(self, toy_corpus):
        items = eval_concept_rule("Free", CONCEPTS, toy_corpus, top_n=10)
        assert [i.doc_id for i in items] == ["d3"]
        assert items[0].score > 0

    def test_top_n_truncates_after_filtering(self, toy_corpus):
        items = eval_concept_rule("Health OR Money", CONCEPTS, toy_corpus, top_n=2)
        assert len(items) == 2

    def test_unknown_concept_names_are_rejected(self, toy_corpus):
        with pytest.raises(RankError, match="unresolved concept name"):
            eval_concept_rule("Nope", CONCEPTS, toy_corpus, top_n=5)
