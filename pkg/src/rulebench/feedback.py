"""Relevance verdicts: ground-truth oracle and a persistent labeling queue.

A LabelTask asks one worker question: is this document relevant to the tag?
Answers are tri-valued (Relevant / Irrelevant / Unknown, rendered as
Yes / No / I don't know in the UI). The oracle answers from a labels file;
the queue collects human answers and resolves each task once its quorum of
workers has spoken.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .bandit import VERDICT_IRRELEVANT, VERDICT_RELEVANT, VERDICT_UNKNOWN, VERDICTS

TASKS_PER_PAGE = 10
COST_PER_VERDICT = 1

DEFAULT_INSTRUCTIONS = "Is this item relevant to the tag? Answer Yes, No, or I don't know."


class FeedbackError(Exception):
    pass


@dataclass(frozen=True)
class LabelTask:
    task_id: str
    doc_id: str
    text: str
    tag: str
    round: int
    instructions: str = DEFAULT_INSTRUCTIONS

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "tag": self.tag,
            "round": self.round,
            "instructions": self.instructions,
        }


@dataclass(frozen=True)
class Verdict:
    task_id: str
    worker_id: str
    answer: str
    timestamp: float = 0.0

    def __post_init__(self):
        if self.answer not in VERDICTS:
            raise FeedbackError(f"invalid answer {self.answer!r}")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "worker_id": self.worker_id,
            "answer": self.answer,
            "timestamp": self.timestamp,
        }


def make_tasks(round_no: int, tag: str, doc_ids, texts: dict[str, str]) -> list[LabelTask]:
    """One task per sampled document; ids are stable for a (round, doc) pair."""
    return [
        LabelTask(
            task_id=f"r{round_no}-{doc_id}",
            doc_id=doc_id,
            text=texts[doc_id],
            tag=tag,
            round=round_no,
        )
        for doc_id in sorted(doc_ids)
    ]


def oracle_verdicts(tasks, labels: dict[str, dict[str, bool]]) -> list[Verdict]:
    """Answer every task from the ground-truth labels file.

    A document with no label for the task's tag gets Unknown. Timestamps are
    the round number, keeping oracle runs byte-reproducible.
    """
    verdicts = []
    for task in tasks:
        tags = labels.get(task.doc_id)
        if tags is None or task.tag not in tags:
            answer = VERDICT_UNKNOWN
        elif tags[task.tag]:
            answer = VERDICT_RELEVANT
        else:
            answer = VERDICT_IRRELEVANT
        verdicts.append(
            Verdict(task_id=task.task_id, worker_id="oracle", answer=answer, timestamp=task.round)
        )
    return verdicts


def resolve(answers, quorum: int = 1) -> str | None:
    """Majority of non-Unknown answers once the quorum is reached.

    Returns None while fewer than `quorum` answers exist. A tie or an
    all-Unknown set resolves to Unknown.
    """
    if quorum < 1:
        raise FeedbackError("quorum must be at least 1")
    collected = list(answers)
    if len(collected) < quorum:
        return None
    relevant = sum(1 for a in collected if a == VERDICT_RELEVANT)
    irrelevant = sum(1 for a in collected if a == VERDICT_IRRELEVANT)
    if relevant > irrelevant:
        return VERDICT_RELEVANT
    if irrelevant > relevant:
        return VERDICT_IRRELEVANT
    return VERDICT_UNKNOWN


@dataclass
class TaskQueue:
    """Pending tasks plus collected verdicts, resolvable once per task.

    Duplicate (task, worker) submissions are ignored (first write wins), and
    a task that has already resolved accepts no further verdicts. Each
    accepted verdict costs one unit.
    """

    quorum: int = 1
    tasks: dict[str, LabelTask] = field(default_factory=dict)
    verdicts: dict[str, dict[str, Verdict]] = field(default_factory=dict)
    resolutions: dict[str, str] = field(default_factory=dict)
    cost_units: int = 0

    def enqueue(self, tasks) -> None:
        incoming = list(tasks)
        for task in incoming:
            if task.task_id in self.tasks:
                raise FeedbackError(f"duplicate task id {task.task_id!r}")
        for task in incoming:
            self.tasks[task.task_id] = task

    def submit(self, verdict: Verdict) -> bool:
        """Store a verdict; returns False for duplicates or resolved tasks."""
        if verdict.task_id not in self.tasks:
            raise FeedbackError(f"unknown task id {verdict.task_id!r}")
        if verdict.task_id in self.resolutions:
            return False
        per_task = self.verdicts.setdefault(verdict.task_id, {})
        if verdict.worker_id in per_task:
            return False
        per_task[verdict.worker_id] = verdict
        self.cost_units += COST_PER_VERDICT
        if len(per_task) >= self.quorum:
            answers = [per_task[w].answer for w in sorted(per_task)]
            outcome = resolve(answers, self.quorum)
            assert outcome is not None
            self.resolutions[verdict.task_id] = outcome
        return True

    def collect(self, round_no: int) -> tuple[list[LabelTask], dict[str, str]]:
        """(pending tasks, resolved task -> verdict) for one round."""
        pending = [
            t
            for t in sorted(self.tasks.values(), key=lambda t: t.task_id)
            if t.round == round_no and t.task_id not in self.resolutions
        ]
        resolved = {
            task_id: outcome
            for task_id, outcome in sorted(self.resolutions.items())
            if self.tasks[task_id].round == round_no
        }
        return pending, resolved

    def pages(self, round_no: int, per_page: int = TASKS_PER_PAGE) -> list[list[LabelTask]]:
        pending, _ = self.collect(round_no)
        return [pending[i : i + per_page] for i in range(0, len(pending), per_page)]

    # ------------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        return {
            "quorum": self.quorum,
            "cost_units": self.cost_units,
            "tasks": [t.to_dict() for _, t in sorted(self.tasks.items())],
            "verdicts": [
                v.to_dict()
                for task_id in sorted(self.verdicts)
                for _, v in sorted(self.verdicts[task_id].items())
            ],
            "resolutions": dict(sorted(self.resolutions.items())),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TaskQueue":
        queue = cls(quorum=raw.get("quorum", 1))
        for entry in raw.get("tasks", []):
            queue.tasks[entry["task_id"]] = LabelTask(**entry)
        for entry in raw.get("verdicts", []):
            verdict = Verdict(**entry)
            queue.verdicts.setdefault(verdict.task_id, {})[verdict.worker_id] = verdict
        queue.resolutions = dict(raw.get("resolutions", {}))
        queue.cost_units = raw.get("cost_units", 0)
        return queue

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "TaskQueue":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
