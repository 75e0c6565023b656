"""Reward/demote ledger, posterior draws, and top-k arm selection."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rulebench.bandit import (
    VERDICTS,
    ArmState,
    BanditError,
    FeedbackLedger,
    ThetaEstimate,
    apply_verdicts,
    posterior_mean,
    sample_theta,
    top_k,
)

ITEM_TOKENS = {
    "t1": frozenset({"flu", "cold"}),
    "t2": frozenset({"flu"}),
    "t3": frozenset({"vote"}),
}


def test_posterior_mean_known_values():
    assert posterior_mean(0, 0) == 0.5
    assert posterior_mean(3, 1) == pytest.approx(4 / 6)
    assert posterior_mean(0, 100) == pytest.approx(1 / 102)


def test_posterior_mean_rejects_negative_counts():
    with pytest.raises(BanditError):
        posterior_mean(-1, 0)


@given(st.integers(0, 50), st.integers(0, 50))
def test_rewards_raise_and_demotes_lower_the_mean(r, d):
    assert posterior_mean(r + 1, d) > posterior_mean(r, d)
    assert posterior_mean(r, d + 1) < posterior_mean(r, d)


def test_prior_parameters_must_be_positive():
    with pytest.raises(BanditError):
        FeedbackLedger(alpha0=0.0)
    with pytest.raises(BanditError):
        FeedbackLedger(beta0=-1.0)


class TestApplyVerdicts:
    def test_counts_move_once_per_token_per_item(self):
        ledger = FeedbackLedger()
        deltas = apply_verdicts(
            ledger,
            [("t1", "Relevant"), ("t2", "Irrelevant"), ("t3", "Unknown")],
            ITEM_TOKENS,
            round_no=1,
        )
        assert deltas == {"flu": (1, 1), "cold": (1, 0)}
        assert ledger.counts("flu") == (1, 1)
        assert ledger.counts("cold") == (1, 0)
        assert ledger.counts("vote") == (0, 0)

    def test_all_unknown_changes_nothing(self):
        ledger = FeedbackLedger()
        deltas = apply_verdicts(
            ledger, [("t1", "Unknown"), ("t2", "Unknown")], ITEM_TOKENS, round_no=1
        )
        assert deltas == {}
        assert ledger.arms == {}

    def test_one_bad_item_leaves_the_ledger_untouched(self):
        ledger = FeedbackLedger()
        with pytest.raises(BanditError, match="unknown item"):
            apply_verdicts(
                ledger, [("t1", "Relevant"), ("zz", "Relevant")], ITEM_TOKENS, round_no=1
            )
        assert ledger.arms == {}

    def test_unknown_verdict_string_rejected(self):
        with pytest.raises(BanditError, match="unknown verdict"):
            apply_verdicts(FeedbackLedger(), [("t1", "Yes")], ITEM_TOKENS, round_no=1)

    def test_verdicts_outside_the_sample_rejected(self):
        with pytest.raises(BanditError, match="unsampled"):
            apply_verdicts(
                FeedbackLedger(),
                [("t2", "Relevant")],
                ITEM_TOKENS,
                round_no=1,
                sampled={"t1"},
            )

    @given(
        st.lists(
            st.tuples(st.sampled_from(sorted(ITEM_TOKENS)), st.sampled_from(VERDICTS)),
            max_size=10,
        )
    )
    def test_ledger_counts_match_a_literal_recount(self, pairs):
        ledger = FeedbackLedger()
        apply_verdicts(ledger, pairs, ITEM_TOKENS, round_no=1)
        for token in ("flu", "cold", "vote"):
            r = sum(1 for i, v in pairs if v == "Relevant" and token in ITEM_TOKENS[i])
            d = sum(1 for i, v in pairs if v == "Irrelevant" and token in ITEM_TOKENS[i])
            assert ledger.counts(token) == (r, d)


def test_concept_counts_sum_member_counts():
    ledger = FeedbackLedger()
    apply_verdicts(
        ledger, [("t1", "Relevant"), ("t2", "Irrelevant")], ITEM_TOKENS, round_no=1
    )
    assert ledger.concept_counts(["flu", "cold", "absent"]) == (2, 1)
    assert ledger.concept_counts([]) == (0, 0)


class TestArmHistory:
    def test_rounds_must_not_regress(self):
        arm = ArmState()
        arm.bump(5, 1, 0)
        with pytest.raises(BanditError, match="precedes"):
            arm.bump(3, 0, 1)

    def test_same_round_bumps_merge(self):
        arm = ArmState()
        arm.bump(5, 1, 0)
        arm.bump(5, 0, 1)
        assert arm.history == [(5, 1, 1)]
        assert (arm.rewards, arm.demotes) == (1, 1)


class TestSampling:
    def test_identical_inputs_reproduce_identical_draws(self):
        counts = {"a": (2, 3), "b": (0, 0)}
        first = sample_theta(counts, seed=7)
        second = sample_theta(counts, seed=7)
        assert first.theta == second.theta
        assert sample_theta(counts, seed=8).theta != first.theta

    def test_each_arm_draw_ignores_the_other_arms(self):
        alone = sample_theta({"a": (2, 3)}, seed=7).theta["a"]
        crowded = sample_theta({"a": (2, 3), "b": (9, 9), "z": (1, 0)}, seed=7).theta["a"]
        assert alone == crowded

    def test_ledger_source_carries_counts_and_priors(self):
        ledger = FeedbackLedger()
        apply_verdicts(ledger, [("t1", "Relevant")], ITEM_TOKENS, round_no=1)
        estimate = sample_theta(ledger, seed=3)
        assert estimate.counts == {"flu": (1, 0), "cold": (1, 0)}
        assert estimate.seed == 3

    @given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 100))
    def test_draws_stay_strictly_inside_the_unit_interval(self, r, d, seed):
        theta = sample_theta({"k": (r, d)}, seed).theta["k"]
        assert 0.0 < theta < 1.0

    def test_heavy_reward_arm_beats_heavy_demote_arm_almost_always(self):
        wins = 0
        for seed in range(200):
            theta = sample_theta({"hi": (50, 0), "lo": (0, 50)}, seed).theta
            wins += theta["hi"] > theta["lo"]
        assert wins >= 198

    def test_uninformed_draws_average_one_half(self):
        draws = [sample_theta({"x": (0, 0)}, seed).theta["x"] for seed in range(10000)]
        assert sum(draws) / len(draws) == pytest.approx(0.5, abs=0.02)


class TestTopK:
    def test_orders_by_theta_then_evidence_then_key(self):
        estimate = ThetaEstimate(
            theta={"a": 0.9, "b": 0.8, "c": 0.8, "d": 0.8},
            counts={"a": (0, 0), "b": (5, 5), "c": (1, 0), "d": (1, 0)},
            seed=0,
        )
        assert top_k(estimate, 3) == ["a", "b", "c"]
        assert top_k(estimate, 10) == ["a", "b", "c", "d"]

    def test_k_must_be_positive(self):
        estimate = ThetaEstimate(theta={"a": 0.5}, counts={"a": (0, 0)}, seed=0)
        with pytest.raises(BanditError):
            top_k(estimate, 0)


def test_ledger_survives_a_save_load_cycle(tmp_path):
    ledger = FeedbackLedger(alpha0=2.0, beta0=3.0)
    apply_verdicts(
        ledger, [("t1", "Relevant"), ("t2", "Irrelevant")], ITEM_TOKENS, round_no=4
    )
    path = tmp_path / "ledger.json"
    ledger.save(str(path))
    loaded = FeedbackLedger.load(str(path))
    assert loaded.to_dict() == ledger.to_dict()
    assert loaded.counts("flu") == (1, 1)
    assert loaded.alpha0 == 2.0
    assert loaded.mean("flu") == pytest.approx((2 + 1) / (5 + 2))
