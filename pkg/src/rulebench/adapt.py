"""Annotation rounds: candidates, stratified sampling, adaptation, stopping.

One round annotates the corpus with the current rule, samples a slice of the
batch for verification, folds the verdicts into the bandit ledger, estimates
per-path precision, and rewrites underperforming parts of the rule tree with
the highest-drawing candidate features. Paths whose smoothed posterior-mean
history flattens out stop consuming verification samples.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .bandit import (
    VERDICT_IRRELEVANT,
    VERDICT_RELEVANT,
    FeedbackLedger,
    ThetaEstimate,
    apply_verdicts,
    posterior_mean,
    sample_theta,
    top_k,
)
from .corpus import Corpus
from .feedback import COST_PER_VERDICT, LabelTask, make_tasks, oracle_verdicts, resolve
from .knowledge import KnowledgeBase
from .lang import render
from .rules import (
    AnnotationBatch,
    Feature,
    RuleNode,
    RuleTree,
    annotate_corpus,
    enumerate_paths,
    feature_doc_ids,
    used_argument_tokens,
)
from .summarize import summarize_features


class AdaptError(Exception):
    pass


@dataclass
class AdaptConfig:
    precision_threshold: float = 0.75
    children_cap: int = 10
    sample_rate: float = 0.03
    epsilon: float = 0.01
    window: int = 3
    seed: int = 0
    min_evidence: int = 5
    quorum: int = 1
    conceptual: bool = True

    def __post_init__(self):
        if not 0.0 < self.precision_threshold < 1.0:
            raise AdaptError("precision threshold must be in (0, 1)")
        if not 0.0 < self.sample_rate <= 1.0:
            raise AdaptError("sample rate must be in (0, 1]")
        if self.window < 2:
            raise AdaptError("smoothing window must be at least 2")
        if self.epsilon <= 0:
            raise AdaptError("epsilon must be positive")
        if self.children_cap < 1:
            raise AdaptError("children cap must be at least 1")
        if self.min_evidence < 1:
            raise AdaptError("minimum evidence must be at least 1")
        if self.quorum < 1:
            raise AdaptError("quorum must be at least 1")

    def to_dict(self) -> dict:
        return {
            "precision_threshold": self.precision_threshold,
            "children_cap": self.children_cap,
            "sample_rate": self.sample_rate,
            "epsilon": self.epsilon,
            "window": self.window,
            "seed": self.seed,
            "min_evidence": self.min_evidence,
            "quorum": self.quorum,
            "conceptual": self.conceptual,
        }


# ------------------------------------------------------------------ candidates


@dataclass(frozen=True)
class Candidate:
    """A feature the adapter may add to the rule.

    `key` is the bandit ledger key: the token itself for a syntactic
    candidate, "<function>:<label>" for a conceptual one. `members` lists the
    tokens whose occurrences earn the candidate rewards and demotes.
    """

    key: str
    function: str
    label: str
    members: tuple[str, ...]
    frequency: int


@dataclass
class CandidateSet:
    round: int
    syntactic: list[Candidate] = field(default_factory=list)
    conceptual: list[Candidate] = field(default_factory=list)

    def all_candidates(self) -> list[Candidate]:
        return self.syntactic + self.conceptual

    def by_key(self) -> dict[str, Candidate]:
        return {c.key: c for c in self.all_candidates()}

    def __len__(self) -> int:
        return len(self.syntactic) + len(self.conceptual)


def extract_candidates(
    batch_ids,
    corpus: Corpus,
    round_no: int,
    kb: KnowledgeBase | None = None,
    rule: RuleTree | None = None,
    concepts: dict | None = None,
    conceptual: bool = True,
) -> CandidateSet:
    """Candidate features from the round's annotated items.

    Syntactic candidates are the batch's distinct tokens minus tokens already
    serving as rule features. Conceptual candidates group those tokens by the
    hypernym and category mappers; their frequency counts batch documents
    containing any member.
    """
    used = used_argument_tokens(rule, concepts) if rule is not None else set()
    token_docs: dict[str, set[str]] = {}
    for doc_id in batch_ids:
        for tok in set(corpus.views[doc_id].tokens):
            if tok in used:
                continue
            token_docs.setdefault(tok, set()).add(doc_id)
    syntactic = [
        Candidate(key=tok, function="keyword", label=tok, members=(tok,), frequency=len(docs))
        for tok, docs in sorted(token_docs.items())
    ]
    conceptual_list: list[Candidate] = []
    if conceptual and kb is not None and token_docs:
        tokens = sorted(token_docs)
        mappers = []
        if kb.hypernyms is not None:
            mappers.append(("topic", kb.hypernyms.lookup))
        if kb.categories is not None and kb.embeddings is not None:

            def category_mapper(term: str) -> str | None:
                vector = kb.embeddings.get(term)
                if vector is None:
                    return None
                return kb.categories.nearest(vector)

            mappers.append(("category", category_mapper))
        for function, mapper in mappers:
            for key, members in sorted(summarize_features(tokens, mapper).items()):
                if not any(mapper(m) == key for m in members):
                    continue
                docs: set[str] = set()
                for member in members:
                    docs |= token_docs[member]
                conceptual_list.append(
                    Candidate(
                        key=f"{function}:{key}",
                        function=function,
                        label=key,
                        members=tuple(members),
                        frequency=len(docs),
                    )
                )
    return CandidateSet(round=round_no, syntactic=syntactic, conceptual=conceptual_list)


# -------------------------------------------------------------------- sampling


@dataclass
class SampleSet:
    round: int
    items: dict[str, str]  # sampled doc id -> stratum key
    strata_sizes: dict[str, int] = field(default_factory=dict)
    allocations: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)


def allocate_largest_remainder(sizes: dict[str, int], total: int) -> dict[str, int]:
    """Proportional integer allocation; leftovers go to the largest fractional
    remainders, ties to the larger stratum then the lower key.

    Remainders are compared as integers (size*total mod population) so that
    mathematically tied strata really tie.
    """
    population = sum(sizes.values())
    if total < 0 or total > population:
        raise AdaptError(f"cannot allocate {total} from population {population}")
    allocation = {key: 0 for key in sizes}
    if population == 0 or total == 0:
        return allocation
    remainders = {}
    for key, size in sizes.items():
        allocation[key] = size * total // population
        remainders[key] = size * total % population
    leftover = total - sum(allocation.values())
    order = sorted(sizes, key=lambda k: (-remainders[k], -sizes[k], k))
    for key in order[:leftover]:
        allocation[key] += 1
    return allocation


def stratified_sample(
    batch_ids,
    candidates: CandidateSet,
    rate: float,
    seed,
    corpus: Corpus,
) -> SampleSet:
    """Sample ceil(rate * batch) items, proportionally across strata.

    Each item's stratum is its highest-frequency candidate feature (ties by
    lower candidate key); items containing no candidate share a reserved
    stratum. Selection within a stratum is uniform under the seed, and the
    whole draw is a pure function of (batch, candidates, rate, seed).
    """
    if not 0.0 < rate <= 1.0:
        raise AdaptError("sample rate must be in (0, 1]")
    ids = sorted(batch_ids)
    if not ids:
        return SampleSet(round=candidates.round, items={})
    by_token: dict[str, list[Candidate]] = {}
    for cand in candidates.all_candidates():
        for member in cand.members:
            by_token.setdefault(member, []).append(cand)
    strata: dict[str, list[str]] = {}
    for doc_id in ids:
        best: Candidate | None = None
        for tok in corpus.views[doc_id].token_set:
            for cand in by_token.get(tok, ()):
                if (
                    best is None
                    or cand.frequency > best.frequency
                    or (cand.frequency == best.frequency and cand.key < best.key)
                ):
                    best = cand
        stratum = best.key if best is not None else ""
        strata.setdefault(stratum, []).append(doc_id)
    total = math.ceil(rate * len(ids))
    allocations = allocate_largest_remainder(
        {key: len(members) for key, members in strata.items()}, total
    )
    sampled: dict[str, str] = {}
    for stratum in sorted(strata):
        quota = allocations[stratum]
        if quota <= 0:
            continue
        rng = random.Random(f"{seed}:{stratum}")
        for doc_id in sorted(rng.sample(strata[stratum], quota)):
            sampled[doc_id] = stratum
    return SampleSet(
        round=candidates.round,
        items=sampled,
        strata_sizes={key: len(members) for key, members in strata.items()},
        allocations=allocations,
    )


# ------------------------------------------------------------------- precision


def path_stats(doc_verdicts: dict[str, str], path_docs) -> tuple[int, int]:
    """(relevant, irrelevant) counts over the path's verified documents."""
    rel = irr = 0
    for doc_id in path_docs:
        verdict = doc_verdicts.get(doc_id)
        if verdict == VERDICT_RELEVANT:
            rel += 1
        elif verdict == VERDICT_IRRELEVANT:
            irr += 1
    return rel, irr


def path_precision(doc_verdicts: dict[str, str], path_docs) -> float | None:
    """Share of verified path documents that are relevant; None if unverified."""
    rel, irr = path_stats(doc_verdicts, path_docs)
    if rel + irr == 0:
        return None
    return rel / (rel + irr)


# ------------------------------------------------------------------- tree walk


def _node_at(rule: RuleTree, address: tuple[int, ...]) -> RuleNode:
    node = rule.roots[address[0]]
    for index in address[1:]:
        node = node.children[index]
    return node


def _leaf_chains(rule: RuleTree) -> list[tuple[tuple[int, ...], ...]]:
    """Per leaf (in path enumeration order), the node addresses along its path."""
    chains: list[tuple[tuple[int, ...], ...]] = []

    def visit(node: RuleNode, trail: tuple[tuple[int, ...], ...]):
        if not node.children:
            chains.append(trail)
            return
        for i, child in enumerate(node.children):
            visit(child, trail + (trail[-1] + (i,),))

    for i, root in enumerate(rule.roots):
        visit(root, ((i,),))
    return chains


def _sibling_addresses(rule: RuleTree, address: tuple[int, ...]) -> list[tuple[int, ...]]:
    if len(address) == 1:
        return [(i,) for i in range(len(rule.roots))]
    parent = _node_at(rule, address[:-1])
    return [address[:-1] + (i,) for i in range(len(parent.children))]


def node_annotation_counts(
    rule: RuleTree,
    corpus: Corpus,
    batch_ids,
    concepts=None,
    mention_postings=None,
) -> dict[tuple[int, ...], int]:
    """Batch items annotated by each node's root-to-node conjunction."""
    counts: dict[tuple[int, ...], int] = {}
    batch = set(batch_ids)

    def visit(node: RuleNode, address: tuple[int, ...], parent_docs: set[str]):
        docs = feature_doc_ids(node.feature, corpus, concepts, mention_postings) & parent_docs
        counts[address] = len(docs)
        for i, child in enumerate(node.children):
            visit(child, address + (i,), docs)

    for i, root in enumerate(rule.roots):
        visit(root, (i,), batch)
    return counts


# ------------------------------------------------------------------ adaptation


ACTION_REPLACE = "replace"
ACTION_RESTRICT = "restrict"


@dataclass(frozen=True)
class Action:
    kind: str
    address: tuple[int, ...]
    feature: Feature


@dataclass
class Plan:
    round: int
    imprecise_paths: list[str] = field(default_factory=list)
    actions: list[Action] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.actions)


def decide_actions(
    rule: RuleTree,
    stats: dict[str, tuple[int, int]],
    node_counts: dict[tuple[int, ...], int],
    config: AdaptConfig,
    round_no: int = 0,
) -> Plan:
    """Flag imprecise paths and pick a fate for every feature on them.

    A path is imprecise once it has the minimum verified evidence and its
    precision sits under the threshold. A feature on an imprecise path is
    replaced when it annotates strictly fewer batch items than the mean of
    its sibling group, restricted otherwise. Roots are never replaced, and
    neither is a feature that some measured-precise path still relies on.
    """
    paths = enumerate_paths(rule)
    chains = _leaf_chains(rule)
    imprecise: set[str] = set()
    precise: set[str] = set()
    for path in paths:
        entry = stats.get(path.path_id)
        if not entry:
            continue
        rel, irr = entry
        verified = rel + irr
        if verified == 0:
            continue
        precision = rel / verified
        if precision >= config.precision_threshold:
            precise.add(path.path_id)
        elif verified >= config.min_evidence:
            imprecise.add(path.path_id)
    plan = Plan(round=round_no, imprecise_paths=sorted(imprecise))
    if not imprecise:
        return plan
    node_paths: dict[tuple[int, ...], set[str]] = {}
    for path, chain in zip(paths, chains):
        for address in chain:
            node_paths.setdefault(address, set()).add(path.path_id)
    handled: set[tuple[int, ...]] = set()
    for path, chain in zip(paths, chains):
        if path.path_id not in imprecise:
            continue
        for address in chain:
            if address in handled:
                continue
            handled.add(address)
            node = _node_at(rule, address)
            siblings = _sibling_addresses(rule, address)
            mean = sum(node_counts.get(a, 0) for a in siblings) / len(siblings)
            below = node_counts.get(address, 0) < mean
            blocked = bool(node_paths[address] & precise)
            if below and len(address) > 1 and not blocked:
                plan.actions.append(Action(ACTION_REPLACE, address, node.feature))
            else:
                plan.actions.append(Action(ACTION_RESTRICT, address, node.feature))
    plan.actions.sort(key=lambda a: a.address)
    return plan


@dataclass
class AdaptationLog:
    applied: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    before_paths: list[str] = field(default_factory=list)
    after_paths: list[str] = field(default_factory=list)
    new_concepts: dict[str, tuple[str, ...]] = field(default_factory=dict)


def _concept_name(label: str, members: tuple[str, ...], existing: dict, fresh: dict) -> str:
    """Stable registry name for a concept; suffixed when the label is taken
    by a different member set (membership is frozen at insertion time)."""
    name = label
    suffix = 1
    while True:
        current = fresh.get(name, existing.get(name) if existing else None)
        if current is None or tuple(current) == members:
            return name
        suffix += 1
        name = f"{label}~{suffix}"


def adapt_rule(
    rule: RuleTree,
    plan: Plan,
    estimate: ThetaEstimate,
    candidates: CandidateSet,
    config: AdaptConfig,
    concepts: dict | None = None,
) -> tuple[RuleTree, AdaptationLog]:
    """Apply a plan: replacements first (deepest nodes first), then restrictions.

    Candidates are consumed in descending draw order, never reusing a feature
    already in the tree or already consumed this round. A replacement removes
    the node's whole subtree and leaves the best unused candidate in its
    place; a restriction appends children up to the cap. An action with no
    usable candidate is skipped and logged, never guessed.
    """
    working = rule.copy()
    log = AdaptationLog(
        before_paths=[p.path_id for p in enumerate_paths(rule)],
    )
    if not plan.actions:
        log.after_paths = list(log.before_paths)
        return working, log
    preference = top_k(estimate, len(estimate.theta)) if estimate.theta else []
    by_key = candidates.by_key()
    dataset = working.roots[0].feature.dataset
    used_keys = {node.feature.key() for _, node in _iter_nodes(working)}
    consumed: set[str] = set()
    fresh_concepts: dict[str, tuple[str, ...]] = {}

    def next_candidate() -> tuple[Candidate, Feature] | None:
        for key in preference:
            if key in consumed:
                continue
            cand = by_key.get(key)
            if cand is None:
                continue
            feature = _candidate_feature(cand, dataset, concepts, fresh_concepts)
            if feature.key() in used_keys:
                continue
            return cand, feature
        return None

    replaces = [a for a in plan.actions if a.kind == ACTION_REPLACE]
    # a replace nested under another replace is moot: the shallow one wins
    replace_roots: list[tuple[int, ...]] = []
    for action in sorted(replaces, key=lambda a: len(a.address)):
        if any(action.address[: len(r)] == r for r in replace_roots):
            log.skipped.append(
                {"kind": action.kind, "address": list(action.address), "reason": "inside replaced subtree"}
            )
        else:
            replace_roots.append(action.address)
    for address in sorted(replace_roots, reverse=True):
        picked = next_candidate()
        old = _node_at(working, address)
        if picked is None:
            log.skipped.append(
                {"kind": ACTION_REPLACE, "address": list(address), "reason": "no candidate available"}
            )
            continue
        cand, feature = picked
        new_node = RuleNode(feature=feature)
        if len(address) == 1:
            working.roots[address[0]] = new_node
        else:
            parent = _node_at(working, address[:-1])
            parent.children[address[-1]] = new_node
        consumed.add(cand.key)
        used_keys.add(feature.key())
        if cand.function != "keyword":
            fresh_concepts[feature.argument] = cand.members
        log.applied.append(
            {
                "kind": ACTION_REPLACE,
                "address": list(address),
                "removed": _feature_label(old.feature),
                "inserted": _feature_label(feature),
                "candidate": cand.key,
            }
        )
    for action in plan.actions:
        if action.kind != ACTION_RESTRICT:
            continue
        if any(action.address[: len(r)] == r for r in replace_roots):
            log.skipped.append(
                {"kind": action.kind, "address": list(action.address), "reason": "inside replaced subtree"}
            )
            continue
        node = _node_at(working, action.address)
        capacity = config.children_cap - len(node.children)
        if capacity <= 0:
            log.skipped.append(
                {"kind": action.kind, "address": list(action.address), "reason": "children at cap"}
            )
            continue
        appended = []
        while capacity > 0:
            picked = next_candidate()
            if picked is None:
                break
            cand, feature = picked
            node.children.append(RuleNode(feature=feature))
            consumed.add(cand.key)
            used_keys.add(feature.key())
            if cand.function != "keyword":
                fresh_concepts[feature.argument] = cand.members
            appended.append(_feature_label(feature))
            capacity -= 1
        if appended:
            log.applied.append(
                {
                    "kind": ACTION_RESTRICT,
                    "address": list(action.address),
                    "node": _feature_label(node.feature),
                    "appended": appended,
                }
            )
        else:
            log.skipped.append(
                {"kind": ACTION_RESTRICT, "address": list(action.address), "reason": "no candidate available"}
            )
    working.validate()
    log.after_paths = [p.path_id for p in enumerate_paths(working)]
    log.new_concepts = fresh_concepts
    return working, log


def _iter_nodes(rule: RuleTree):
    def visit(node: RuleNode, address: tuple[int, ...]):
        yield address, node
        for i, child in enumerate(node.children):
            yield from visit(child, address + (i,))

    for i, root in enumerate(rule.roots):
        yield from visit(root, (i,))


def _candidate_feature(
    cand: Candidate, dataset: str, concepts: dict | None, fresh: dict
) -> Feature:
    if cand.function == "keyword":
        return Feature(dataset, "keyword", "contains", cand.label)
    name = _concept_name(cand.label, cand.members, concepts or {}, fresh)
    return Feature(dataset, cand.function, "in_group", name)


def _feature_label(feature: Feature) -> str:
    prefix = "NOT " if feature.negated else ""
    return f"{prefix}{feature.function}.{feature.operator}({feature.argument})"


# -------------------------------------------------------------------- stopping


@dataclass
class StabilityWindow:
    """Per-path posterior-mean history with overlapping sliding means.

    A path stabilizes when the newest window mean has not dropped more than
    3 * epsilon below the previous one. Stabilization is sticky: the engine
    never reopens a stabilized path.
    """

    size: int = 3
    epsilon: float = 0.01
    histories: dict[str, list[float]] = field(default_factory=dict)
    stabilized: set[str] = field(default_factory=set)

    def update(self, path_id: str, theta: float) -> bool:
        if path_id in self.stabilized:
            return True
        history = self.histories.setdefault(path_id, [])
        history.append(theta)
        if len(history) < self.size + 1:
            return False
        newest = sum(history[-self.size :]) / self.size
        previous = sum(history[-self.size - 1 : -1]) / self.size
        if newest + 3 * self.epsilon >= previous:
            self.stabilized.add(path_id)
            return True
        return False

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "epsilon": self.epsilon,
            "histories": {k: list(v) for k, v in sorted(self.histories.items())},
            "stabilized": sorted(self.stabilized),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "StabilityWindow":
        window = cls(size=raw.get("size", 3), epsilon=raw.get("epsilon", 0.01))
        window.histories = {k: list(v) for k, v in raw.get("histories", {}).items()}
        window.stabilized = set(raw.get("stabilized", []))
        return window


def update_stability(window: StabilityWindow, path_id: str, theta: float) -> bool:
    return window.update(path_id, theta)


# --------------------------------------------------------------------- metrics


@dataclass(frozen=True)
class PRF:
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def prf_metrics(tp: int, fp: int, fn: int) -> PRF:
    """Precision/recall/F1 with undefined ratios reported as absent, not 0."""
    if min(tp, fp, fn) < 0:
        raise AdaptError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return PRF(precision, recall, f1)


# ----------------------------------------------------------------------- round


@dataclass
class RoundReport:
    round: int
    tag: str
    annotated: int
    eligible: int
    sample_size: int
    verdicts_consumed: int
    cost_units: int
    syntactic_candidates: int
    conceptual_candidates: int
    path_precisions: dict[str, float | None]
    path_evidence: dict[str, list[int]]
    path_theta: dict[str, float]
    overall_precision: float | None
    imprecise_paths: list[str]
    actions: list[dict]
    skipped_actions: list[dict]
    stabilized_paths: list[str]
    rule_render: str
    paths_after: list[str]
    seed: int

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "tag": self.tag,
            "annotated": self.annotated,
            "eligible": self.eligible,
            "sample_size": self.sample_size,
            "verdicts_consumed": self.verdicts_consumed,
            "cost_units": self.cost_units,
            "syntactic_candidates": self.syntactic_candidates,
            "conceptual_candidates": self.conceptual_candidates,
            "path_precisions": dict(self.path_precisions),
            "path_evidence": {k: list(v) for k, v in self.path_evidence.items()},
            "path_theta": dict(self.path_theta),
            "overall_precision": self.overall_precision,
            "imprecise_paths": list(self.imprecise_paths),
            "actions": list(self.actions),
            "skipped_actions": list(self.skipped_actions),
            "stabilized_paths": list(self.stabilized_paths),
            "rule_render": self.rule_render,
            "paths_after": list(self.paths_after),
            "seed": self.seed,
        }


@dataclass
class PendingRound:
    round_no: int
    batch: AnnotationBatch
    path_docs: dict[str, set[str]]
    candidates: CandidateSet
    sample: SampleSet
    tasks: list[LabelTask]


@dataclass
class RunState:
    """Everything one rule's adaptation run owns and mutates round by round."""

    rule: RuleTree
    corpus: Corpus
    config: AdaptConfig
    kb: KnowledgeBase | None = None
    concepts: dict[str, tuple[str, ...]] = field(default_factory=dict)
    ledger: FeedbackLedger | None = None
    windows: StabilityWindow | None = None
    doc_verdicts: dict[str, str] = field(default_factory=dict)
    mention_postings: dict | None = None
    round_no: int = 1
    total_cost: int = 0
    reports: list[RoundReport] = field(default_factory=list)

    def __post_init__(self):
        if self.ledger is None:
            self.ledger = FeedbackLedger()
        if self.windows is None:
            self.windows = StabilityWindow(size=self.config.window, epsilon=self.config.epsilon)


def start_round(state: RunState) -> PendingRound:
    """Annotate, extract candidates, and sample; leaves the state untouched."""
    batch = annotate_corpus(
        state.rule, state.corpus, state.round_no, state.concepts, state.mention_postings
    )
    path_docs: dict[str, set[str]] = {}
    for doc_id, path_ids in batch.entries.items():
        for path_id in path_ids:
            path_docs.setdefault(path_id, set()).add(doc_id)
    candidates = extract_candidates(
        batch.entries,
        state.corpus,
        state.round_no,
        kb=state.kb,
        rule=state.rule,
        concepts=state.concepts,
        conceptual=state.config.conceptual,
    )
    stabilized = state.windows.stabilized
    eligible = [
        doc_id
        for doc_id, path_ids in batch.entries.items()
        if doc_id not in state.doc_verdicts
        and not all(path_id in stabilized for path_id in path_ids)
    ]
    sample = stratified_sample(
        eligible,
        candidates,
        state.config.sample_rate,
        f"{state.config.seed}:r{state.round_no}",
        state.corpus,
    )
    texts = {doc_id: state.corpus.docs[doc_id].text for doc_id in sample.items}
    tasks = make_tasks(state.round_no, state.rule.tag, sample.items, texts)
    return PendingRound(
        round_no=state.round_no,
        batch=batch,
        path_docs=path_docs,
        candidates=candidates,
        sample=sample,
        tasks=tasks,
    )


def finish_round(state: RunState, pending: PendingRound, verdicts) -> RoundReport:
    """Resolve verdicts, update ledger and rule, emit the report.

    All mutations land on copies first and commit together at the end, so a
    failure anywhere leaves the state exactly as the round found it.
    """
    verdict_list = list(verdicts)
    answers: dict[str, list[str]] = {}
    task_by_id = {t.task_id: t for t in pending.tasks}
    for verdict in verdict_list:
        if verdict.task_id not in task_by_id:
            raise AdaptError(f"verdict for unknown task {verdict.task_id!r}")
        answers.setdefault(verdict.task_id, []).append(verdict.answer)
    doc_answers: dict[str, str] = {}
    for task in pending.tasks:
        outcome = resolve(answers.get(task.task_id, []), state.config.quorum)
        if outcome is None:
            raise AdaptError(f"task {task.task_id!r} is unresolved; round aborted")
        doc_answers[task.doc_id] = outcome

    # shadow copies: commit only when every step has succeeded
    ledger = FeedbackLedger.from_dict(state.ledger.to_dict())
    windows = StabilityWindow.from_dict(state.windows.to_dict())
    doc_verdicts = dict(state.doc_verdicts)

    syntactic_tokens = {c.key for c in pending.candidates.syntactic}
    item_tokens = {
        doc_id: frozenset(state.corpus.views[doc_id].token_set & syntactic_tokens)
        for doc_id in doc_answers
    }
    apply_verdicts(
        ledger,
        sorted(doc_answers.items()),
        item_tokens,
        pending.round_no,
        sampled=set(pending.sample.items),
    )
    for doc_id, answer in doc_answers.items():
        if answer in (VERDICT_RELEVANT, VERDICT_IRRELEVANT):
            doc_verdicts[doc_id] = answer

    stats: dict[str, tuple[int, int]] = {}
    precisions: dict[str, float | None] = {}
    thetas: dict[str, float] = {}
    for path in enumerate_paths(state.rule):
        docs = pending.path_docs.get(path.path_id, set())
        rel, irr = path_stats(doc_verdicts, docs)
        stats[path.path_id] = (rel, irr)
        precisions[path.path_id] = rel / (rel + irr) if rel + irr else None
        thetas[path.path_id] = posterior_mean(rel, irr, ledger.alpha0, ledger.beta0)
        if rel + irr > 0:
            windows.update(path.path_id, thetas[path.path_id])

    counts: dict[str, tuple[int, int]] = {}
    for cand in pending.candidates.all_candidates():
        if cand.function == "keyword":
            counts[cand.key] = ledger.counts(cand.key)
        else:
            counts[cand.key] = ledger.concept_counts(cand.members)
    estimate = sample_theta(counts, f"{state.config.seed}:r{pending.round_no}")

    node_counts = node_annotation_counts(
        state.rule, state.corpus, pending.batch.entries, state.concepts, state.mention_postings
    )
    plan = decide_actions(state.rule, stats, node_counts, state.config, pending.round_no)
    new_rule, log = adapt_rule(
        state.rule, plan, estimate, pending.candidates, state.config, state.concepts
    )

    batch_rel, batch_irr = path_stats(doc_verdicts, pending.batch.entries)
    overall = batch_rel / (batch_rel + batch_irr) if batch_rel + batch_irr else None
    consumed = len(verdict_list)
    report = RoundReport(
        round=pending.round_no,
        tag=state.rule.tag,
        annotated=len(pending.batch),
        eligible=sum(pending.sample.strata_sizes.values()),
        sample_size=len(pending.sample),
        verdicts_consumed=consumed,
        cost_units=consumed * COST_PER_VERDICT,
        syntactic_candidates=len(pending.candidates.syntactic),
        conceptual_candidates=len(pending.candidates.conceptual),
        path_precisions=precisions,
        path_evidence={k: [r, i] for k, (r, i) in stats.items()},
        path_theta=thetas,
        overall_precision=overall,
        imprecise_paths=plan.imprecise_paths,
        actions=log.applied,
        skipped_actions=log.skipped,
        stabilized_paths=sorted(windows.stabilized & set(precisions)),
        rule_render=render(new_rule),
        paths_after=log.after_paths,
        seed=state.config.seed,
    )

    state.rule = new_rule
    state.ledger = ledger
    state.windows = windows
    state.doc_verdicts = doc_verdicts
    state.concepts.update(log.new_concepts)
    state.total_cost += report.cost_units
    state.reports.append(report)
    state.round_no += 1
    return report


def run_round(state: RunState, feedback) -> RoundReport:
    """One full round; `feedback` maps the round's tasks to verdicts."""
    pending = start_round(state)
    verdicts = feedback(pending.tasks)
    return finish_round(state, pending, verdicts)


def oracle_feedback(labels: dict[str, dict[str, bool]]):
    """Feedback source that answers every task from a ground-truth labels map."""

    def supply(tasks):
        return oracle_verdicts(tasks, labels)

    return supply


def evaluate_against_labels(
    rule: RuleTree,
    corpus: Corpus,
    labels: dict[str, dict[str, bool]],
    concepts=None,
    mention_postings=None,
) -> PRF:
    """Ground-truth precision/recall of the rule's current annotation set."""
    batch = annotate_corpus(rule, corpus, 0, concepts, mention_postings)
    tag = rule.tag
    tp = fp = fn = 0
    annotated = set(batch.entries)
    for doc_id, tags in labels.items():
        if tag not in tags or doc_id not in corpus.docs:
            continue
        if doc_id in annotated:
            if tags[tag]:
                tp += 1
            else:
                fp += 1
        elif tags[tag]:
            fn += 1
    return prf_metrics(tp, fp, fn)
