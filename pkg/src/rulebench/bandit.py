"""Reward/demote bookkeeping per candidate feature and Thompson sampling.

Each syntactic candidate (a token) is an arm with cumulative reward and
demote counts. A conceptual candidate never stores counts of its own: its
(r, d) is the sum over member tokens, computed on demand. Performance draws
come from Beta(alpha0 + r, beta0 + d) with a per-arm seeded generator, so a
draw for one arm is unaffected by which other arms exist.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

VERDICT_RELEVANT = "Relevant"
VERDICT_IRRELEVANT = "Irrelevant"
VERDICT_UNKNOWN = "Unknown"
VERDICTS = (VERDICT_RELEVANT, VERDICT_IRRELEVANT, VERDICT_UNKNOWN)

_THETA_EPS = 1e-12


class BanditError(Exception):
    pass


@dataclass
class ArmState:
    rewards: int = 0
    demotes: int = 0
    # (round, reward delta, demote delta); rounds strictly increasing
    history: list[tuple[int, int, int]] = field(default_factory=list)

    def bump(self, round_no: int, dr: int, dd: int) -> None:
        if self.history and round_no < self.history[-1][0]:
            raise BanditError(
                f"round {round_no} precedes recorded round {self.history[-1][0]}"
            )
        self.rewards += dr
        self.demotes += dd
        if self.history and self.history[-1][0] == round_no:
            prev_round, prev_dr, prev_dd = self.history[-1]
            self.history[-1] = (prev_round, prev_dr + dr, prev_dd + dd)
        else:
            self.history.append((round_no, dr, dd))


class FeedbackLedger:
    """Cumulative per-arm counts with a uniform Beta prior by default."""

    def __init__(self, alpha0: float = 1.0, beta0: float = 1.0):
        if alpha0 <= 0 or beta0 <= 0:
            raise BanditError("prior parameters must be positive")
        self.alpha0 = alpha0
        self.beta0 = beta0
        self.arms: dict[str, ArmState] = {}

    def arm(self, key: str) -> ArmState:
        state = self.arms.get(key)
        if state is None:
            state = self.arms[key] = ArmState()
        return state

    def counts(self, key: str) -> tuple[int, int]:
        state = self.arms.get(key)
        return (state.rewards, state.demotes) if state else (0, 0)

    def concept_counts(self, member_keys) -> tuple[int, int]:
        """Aggregate (r, d) of a conceptual feature: sum over its members."""
        r = d = 0
        for key in member_keys:
            mr, md = self.counts(key)
            r += mr
            d += md
        return r, d

    def mean(self, key: str) -> float:
        r, d = self.counts(key)
        return posterior_mean(r, d, self.alpha0, self.beta0)

    # ------------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "arms": {
                key: {
                    "r": state.rewards,
                    "d": state.demotes,
                    "history": [list(h) for h in state.history],
                }
                for key, state in sorted(self.arms.items())
            },
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "FeedbackLedger":
        ledger = cls(alpha0=raw.get("alpha0", 1.0), beta0=raw.get("beta0", 1.0))
        for key, entry in raw.get("arms", {}).items():
            state = ArmState(rewards=entry["r"], demotes=entry["d"])
            state.history = [tuple(h) for h in entry.get("history", [])]
            ledger.arms[key] = state
        return ledger

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "FeedbackLedger":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def apply_verdicts(
    ledger: FeedbackLedger,
    verdicts,
    item_tokens: dict[str, frozenset],
    round_no: int,
    sampled=None,
) -> dict[str, tuple[int, int]]:
    """Fold resolved verdicts into the ledger.

    `verdicts` is an iterable of (item id, verdict). A token arm present in a
    Relevant item gains one reward, in an Irrelevant item one demote, at most
    once per item. All verdicts are validated before any count moves, so a
    rejected item leaves the ledger untouched. Returns the per-arm deltas.
    """
    pairs = list(verdicts)
    for item_id, verdict in pairs:
        if verdict not in VERDICTS:
            raise BanditError(f"unknown verdict {verdict!r} for item {item_id!r}")
        if item_id not in item_tokens:
            raise BanditError(f"verdict for unknown item {item_id!r}")
        if sampled is not None and item_id not in sampled:
            raise BanditError(f"verdict for unsampled item {item_id!r}")
    deltas: dict[str, tuple[int, int]] = {}
    for item_id, verdict in pairs:
        if verdict == VERDICT_UNKNOWN:
            continue
        for token in sorted(item_tokens[item_id]):
            dr, dd = (1, 0) if verdict == VERDICT_RELEVANT else (0, 1)
            ledger.arm(token).bump(round_no, dr, dd)
            prev = deltas.get(token, (0, 0))
            deltas[token] = (prev[0] + dr, prev[1] + dd)
    return deltas


def posterior_mean(r: int, d: int, alpha0: float = 1.0, beta0: float = 1.0) -> float:
    if r < 0 or d < 0:
        raise BanditError("counts must be non-negative")
    return (alpha0 + r) / (alpha0 + beta0 + r + d)


@dataclass(frozen=True)
class ThetaEstimate:
    theta: dict[str, float]
    counts: dict[str, tuple[int, int]]
    seed: int | str


def sample_theta(
    source,
    seed: int | str,
    alpha0: float | None = None,
    beta0: float | None = None,
) -> ThetaEstimate:
    """One Beta(alpha0 + r, beta0 + d) draw per feature key.

    `source` is a FeedbackLedger, or a {key: (r, d)} mapping for callers that
    aggregate counts themselves (conceptual features). The generator for each
    key is seeded from (seed, key), so identical inputs reproduce identical
    draws regardless of dict order or of which other keys are present.
    """
    if isinstance(source, FeedbackLedger):
        counts = {k: (s.rewards, s.demotes) for k, s in source.arms.items()}
        alpha0 = source.alpha0 if alpha0 is None else alpha0
        beta0 = source.beta0 if beta0 is None else beta0
    else:
        counts = dict(source)
    alpha0 = 1.0 if alpha0 is None else alpha0
    beta0 = 1.0 if beta0 is None else beta0
    theta: dict[str, float] = {}
    for key in sorted(counts):
        r, d = counts[key]
        rng = random.Random(f"{seed}:{key}")
        draw = rng.betavariate(alpha0 + r, beta0 + d)
        theta[key] = min(1.0 - _THETA_EPS, max(_THETA_EPS, draw))
    return ThetaEstimate(theta=theta, counts=dict(counts), seed=seed)


def top_k(estimate: ThetaEstimate, k: int) -> list[str]:
    """Highest-theta feature keys; ties prefer more evidence, then lower key."""
    if k < 1:
        raise BanditError("k must be at least 1")

    def sort_key(key: str):
        r, d = estimate.counts.get(key, (0, 0))
        return (-estimate.theta[key], -(r + d), key)

    return sorted(estimate.theta, key=sort_key)[:k]
