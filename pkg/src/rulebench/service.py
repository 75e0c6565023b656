"""HTTP JSON API over corpora, rules, rounds, tasks, summaries and rankings.

Single-process, synchronous state machine. One round may be in flight per
rule; verdict submissions are idempotent; every mutation is guarded by one
process-wide lock. State persists as JSON files in an optional workspace
directory and is reloaded on startup.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .adapt import (
    AdaptConfig,
    AdaptError,
    PendingRound,
    RoundReport,
    RunState,
    StabilityWindow,
    evaluate_against_labels,
    finish_round,
    oracle_feedback,
    start_round,
)
from .bandit import BanditError, FeedbackLedger
from .corpus import Corpus, CorpusError, parse_labels_lines
from .feedback import TASKS_PER_PAGE, FeedbackError, TaskQueue, Verdict
from .knowledge import KnowledgeBase, KnowledgeError
from .lang import NormalizeError, ParseError, parse_to_rule, render
from .rank import Preference, RankError, eval_concept_rule, rank
from .rules import RuleError, enumerate_paths
from .summarize import DEFAULT_WEDGES, KINDS, Concept, SummarizeError, build_summaries

_VALIDATION_ERRORS = (
    ParseError,
    NormalizeError,
    CorpusError,
    RankError,
    SummarizeError,
    FeedbackError,
    AdaptError,
    RuleError,
    BanditError,
    KnowledgeError,
    ValueError,
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(what: str, key: str) -> ApiError:
    return ApiError(404, "not_found", f"unknown {what} {key!r}")


# --------------------------------------------------------------------- store


@dataclass
class RuleSession:
    """One rule's live adaptation state plus its labeling queue and event log."""

    rule_id: str
    corpus_id: str
    state: RunState
    queue: TaskQueue
    events: list[dict] = field(default_factory=list)
    pending: PendingRound | None = None
    feedback_mode: str | None = None

    def event(self, round_no: int, kind: str, **data) -> None:
        self.events.append(
            {"index": len(self.events), "round": round_no, "type": kind, "data": data}
        )


class ServiceStore:
    def __init__(self, workspace: str | None = None, kb: KnowledgeBase | None = None):
        self.workspace = workspace
        self.kb = kb if kb is not None else KnowledgeBase()
        self.corpora: dict[str, Corpus] = {}
        self.labels: dict[str, dict[str, dict[str, bool]]] = {}
        self.rules: dict[str, RuleSession] = {}
        self.ingesting: set[str] = set()
        self.summary_cache: dict[tuple, dict] = {}
        self.lock = threading.Lock()
        self._corpus_seq = 0
        self._rule_seq = 0

    def next_corpus_id(self) -> str:
        self._corpus_seq += 1
        return f"c{self._corpus_seq}"

    def next_rule_id(self) -> str:
        self._rule_seq += 1
        return f"r{self._rule_seq}"

    def get_corpus(self, corpus_id: str) -> Corpus:
        if corpus_id in self.ingesting:
            raise ApiError(503, "ingesting", f"corpus {corpus_id!r} is still ingesting")
        if corpus_id not in self.corpora:
            raise _not_found("corpus", corpus_id)
        return self.corpora[corpus_id]

    def get_rule(self, rule_id: str) -> RuleSession:
        if rule_id not in self.rules:
            raise _not_found("rule", rule_id)
        return self.rules[rule_id]

    # ---------------------------------------------------------- persistence

    def _path(self, name: str) -> str:
        return os.path.join(self.workspace, name)

    def save_corpus(self, corpus_id: str, raw: str) -> None:
        if not self.workspace:
            return
        os.makedirs(self.workspace, exist_ok=True)
        with open(self._path(f"corpus_{corpus_id}.jsonl"), "w", encoding="utf-8") as fh:
            fh.write(raw)

    def save_labels(self, corpus_id: str, raw: str) -> None:
        if not self.workspace:
            return
        os.makedirs(self.workspace, exist_ok=True)
        with open(self._path(f"labels_{corpus_id}.jsonl"), "w", encoding="utf-8") as fh:
            fh.write(raw)

    def save_rule(self, session: RuleSession) -> None:
        if not self.workspace:
            return
        os.makedirs(self.workspace, exist_ok=True)
        state = session.state
        snapshot = {
            "rule_id": session.rule_id,
            "corpus_id": session.corpus_id,
            "tag": state.rule.tag,
            "render": render(state.rule),
            "config": state.config.to_dict(),
            "concepts": {k: list(v) for k, v in sorted(state.concepts.items())},
            "ledger": state.ledger.to_dict(),
            "windows": state.windows.to_dict(),
            "doc_verdicts": dict(sorted(state.doc_verdicts.items())),
            "round_no": state.round_no,
            "total_cost": state.total_cost,
            "reports": [r.to_dict() for r in state.reports],
            "events": session.events,
            "queue": session.queue.to_dict(),
            "feedback_mode": session.feedback_mode,
            "in_flight": session.pending is not None,
        }
        with open(self._path(f"rule_{session.rule_id}.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(snapshot, sort_keys=True, indent=2) + "\n")

    def load_workspace(self) -> None:
        if not self.workspace or not os.path.isdir(self.workspace):
            return
        names = sorted(os.listdir(self.workspace))
        for name in names:
            if name.startswith("corpus_") and name.endswith(".jsonl"):
                corpus_id = name[len("corpus_") : -len(".jsonl")]
                corpus = Corpus()
                corpus.ingest_file(self._path(name))
                self.corpora[corpus_id] = corpus
                seq = int(corpus_id[1:]) if corpus_id[1:].isdigit() else 0
                self._corpus_seq = max(self._corpus_seq, seq)
        for name in names:
            if name.startswith("labels_") and name.endswith(".jsonl"):
                corpus_id = name[len("labels_") : -len(".jsonl")]
                with open(self._path(name), encoding="utf-8") as fh:
                    self.labels[corpus_id] = parse_labels_lines(fh)
        for name in names:
            if name.startswith("rule_") and name.endswith(".json"):
                with open(self._path(name), encoding="utf-8") as fh:
                    self._load_rule(json.load(fh))

    def _load_rule(self, snapshot: dict) -> None:
        corpus = self.corpora.get(snapshot["corpus_id"])
        if corpus is None:
            return
        config = AdaptConfig(**snapshot["config"])
        rule = parse_to_rule(
            snapshot["render"],
            rule_id=snapshot["rule_id"],
            tag=snapshot["tag"],
            children_cap=config.children_cap,
        )
        state = RunState(
            rule=rule,
            corpus=corpus,
            config=config,
            kb=self.kb,
            concepts={k: tuple(v) for k, v in snapshot.get("concepts", {}).items()},
            ledger=FeedbackLedger.from_dict(snapshot["ledger"]),
            windows=StabilityWindow.from_dict(snapshot["windows"]),
            doc_verdicts=dict(snapshot.get("doc_verdicts", {})),
            round_no=snapshot["round_no"],
            total_cost=snapshot.get("total_cost", 0),
            reports=[RoundReport(**r) for r in snapshot.get("reports", [])],
        )
        session = RuleSession(
            rule_id=snapshot["rule_id"],
            corpus_id=snapshot["corpus_id"],
            state=state,
            queue=TaskQueue.from_dict(snapshot.get("queue", {})),
            events=list(snapshot.get("events", [])),
            feedback_mode=snapshot.get("feedback_mode"),
        )
        if snapshot.get("in_flight"):
            # start_round is deterministic, so the pending round rebuilds exactly
            session.pending = start_round(state)
        self.rules[session.rule_id] = session
        seq = int(session.rule_id[1:]) if session.rule_id[1:].isdigit() else 0
        self._rule_seq = max(self._rule_seq, seq)


# ------------------------------------------------------------------ rounds


def _run_oracle_round(store: ServiceStore, session: RuleSession) -> RoundReport:
    pending = session.pending
    labels = store.labels.get(session.corpus_id)
    if labels is None:
        raise ApiError(
            400, "no_labels", f"corpus {session.corpus_id!r} has no labels for oracle feedback"
        )
    verdicts = oracle_feedback(labels)(pending.tasks)
    report = finish_round(session.state, pending, verdicts)
    session.pending = None
    session.feedback_mode = None
    session.event(report.round, "verdict_progress", done=len(pending.tasks), total=len(pending.tasks))
    session.event(report.round, "adapted", actions=report.actions, skipped=report.skipped_actions)
    session.event(report.round, "report_ready", precision=report.overall_precision)
    return report


def _finish_human_round(store: ServiceStore, session: RuleSession) -> RoundReport:
    pending = session.pending
    verdicts = [
        verdict
        for task in pending.tasks
        for _, verdict in sorted(session.queue.verdicts.get(task.task_id, {}).items())
    ]
    report = finish_round(session.state, pending, verdicts)
    session.pending = None
    session.feedback_mode = None
    session.event(report.round, "adapted", actions=report.actions, skipped=report.skipped_actions)
    session.event(report.round, "report_ready", precision=report.overall_precision)
    return report


def _round_payload(session: RuleSession, report: RoundReport | None) -> dict:
    if report is not None:
        return {
            "rule_id": session.rule_id,
            "round": report.round,
            "status": "completed",
            "tasks": 0,
            "report": report.to_dict(),
        }
    pending = session.pending
    return {
        "rule_id": session.rule_id,
        "round": pending.round_no,
        "status": "awaiting_verdicts",
        "tasks": len(pending.tasks),
        "report": None,
    }


# -------------------------------------------------------------------- app


def create_app(workspace: str | None = None, kb: KnowledgeBase | None = None) -> FastAPI:
    workspace = workspace if workspace is not None else os.environ.get("RULEBENCH_WORKSPACE")
    store = ServiceStore(workspace=workspace, kb=kb)
    store.load_workspace()

    app = FastAPI(title="rulebench", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[os.environ.get("RULEBENCH_UI_ORIGIN", "*")],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "validation", "message": str(exc.errors()[:1])}},
        )

    def _validate(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ApiError:
            raise
        except _VALIDATION_ERRORS as exc:
            raise ApiError(400, "validation", str(exc)) from exc

    # ------------------------------------------------------------- corpora

    @app.post("/v1/corpora", status_code=201)
    def post_corpus(file: UploadFile):
        raw = file.file.read().decode("utf-8")
        with store.lock:
            corpus_id = store.next_corpus_id()
            store.ingesting.add(corpus_id)
        try:
            corpus = Corpus()
            added, warnings = _validate(corpus.ingest_lines, raw.splitlines())
            with store.lock:
                store.corpora[corpus_id] = corpus
                store.save_corpus(corpus_id, raw)
        finally:
            store.ingesting.discard(corpus_id)
        stats = corpus.stats()
        return {
            "corpus_id": corpus_id,
            "documents": stats.doc_count,
            "terms": stats.term_count(),
            "warnings": warnings,
        }

    @app.post("/v1/corpora/{corpus_id}/labels")
    async def post_labels(corpus_id: str, request: Request):
        corpus = store.get_corpus(corpus_id)
        raw = (await request.body()).decode("utf-8")
        labels = _validate(parse_labels_lines, raw.splitlines())
        unknown = [doc_id for doc_id in labels if doc_id not in corpus.docs]
        if unknown:
            raise ApiError(400, "validation", f"label for unknown document {unknown[0]!r}")
        with store.lock:
            store.labels[corpus_id] = labels
            store.save_labels(corpus_id, raw)
        return {"corpus_id": corpus_id, "labels": len(labels)}

    @app.get("/v1/corpora/{corpus_id}")
    def get_corpus(corpus_id: str):
        corpus = store.get_corpus(corpus_id)
        stats = corpus.stats()
        return {
            "corpus_id": corpus_id,
            "documents": stats.doc_count,
            "terms": stats.term_count(),
            "labels": len(store.labels.get(corpus_id, {})),
        }

    # ----------------------------------------------------------- summaries

    @app.get("/v1/summaries")
    def get_summaries(corpus: str, kind: str | None = None, wedges: int = DEFAULT_WEDGES):
        corpus_obj = store.get_corpus(corpus)
        kinds = (kind,) if kind else KINDS
        if wedges < 1:
            raise ApiError(400, "validation", "wedges must be at least 1")
        key = (corpus, kinds, wedges)
        cached = store.summary_cache.get(key)
        if cached is None:
            summary = _validate(build_summaries, corpus_obj, store.kb, kinds, wedges)
            cached = {"corpus_id": corpus, **summary.to_dict()}
            store.summary_cache[key] = cached
        return cached

    # --------------------------------------------------------------- rules

    @app.post("/v1/rules", status_code=201)
    def post_rule(body: dict):
        for field_name in ("corpus", "tag", "text"):
            if not body.get(field_name):
                raise ApiError(400, "validation", f"body needs {field_name!r}")
        corpus = store.get_corpus(body["corpus"])
        config = _validate(AdaptConfig, **body.get("config", {}))
        with store.lock:
            rule_id = store.next_rule_id()
        rule = _validate(
            parse_to_rule,
            body["text"],
            rule_id=rule_id,
            tag=body["tag"],
            children_cap=config.children_cap,
        )
        state = RunState(rule=rule, corpus=corpus, config=config, kb=store.kb)
        session = RuleSession(
            rule_id=rule_id,
            corpus_id=body["corpus"],
            state=state,
            queue=TaskQueue(quorum=config.quorum),
        )
        with store.lock:
            store.rules[rule_id] = session
            store.save_rule(session)
        return {
            "rule_id": rule_id,
            "tag": rule.tag,
            "render": render(rule),
            "paths": [p.path_id for p in enumerate_paths(rule)],
        }

    def _rule_payload(session: RuleSession) -> dict:
        state = session.state
        return {
            "rule_id": session.rule_id,
            "corpus_id": session.corpus_id,
            "tag": state.rule.tag,
            "render": render(state.rule),
            "paths": [p.path_id for p in enumerate_paths(state.rule)],
            "round_no": state.round_no,
            "in_flight": session.pending is not None,
            "stabilized": sorted(state.windows.stabilized),
            "total_cost": state.total_cost,
            "config": state.config.to_dict(),
            "concepts": {k: list(v) for k, v in sorted(state.concepts.items())},
        }

    @app.get("/v1/rules/{rule_id}")
    def get_rule(rule_id: str):
        return _rule_payload(store.get_rule(rule_id))

    @app.post("/v1/rules/{rule_id}/rounds", status_code=202)
    def post_round(rule_id: str, feedback: str = "human"):
        session = store.get_rule(rule_id)
        if feedback not in ("oracle", "human"):
            raise ApiError(400, "validation", f"unknown feedback mode {feedback!r}")
        with store.lock:
            if session.pending is not None:
                raise ApiError(
                    409, "round_conflict", f"rule {rule_id!r} already has a round in flight"
                )
            pending = _validate(start_round, session.state)
            session.pending = pending
            session.feedback_mode = feedback
            session.event(pending.round_no, "round_started", annotated=len(pending.batch))
            session.event(pending.round_no, "sample_issued", tasks=len(pending.tasks))
            if feedback == "human":
                session.queue.enqueue(pending.tasks)
                report = None
                if not pending.tasks:
                    report = _validate(_finish_human_round, store, session)
                store.save_rule(session)
                return _round_payload(session, report)
        # oracle rounds run outside the lock; the pending flag keeps rivals out
        try:
            report = _validate(_run_oracle_round, store, session)
            with store.lock:
                store.save_rule(session)
        except Exception:
            with store.lock:
                session.pending = None
                session.feedback_mode = None
            raise
        return _round_payload(session, report)

    @app.get("/v1/rules/{rule_id}/report")
    def get_report(rule_id: str):
        session = store.get_rule(rule_id)
        state = session.state
        payload = {
            "rule_id": session.rule_id,
            "tag": state.rule.tag,
            "rounds": [r.to_dict() for r in state.reports],
            "final_rule": render(state.rule),
            "total_cost": state.total_cost,
            "stabilized": sorted(state.windows.stabilized),
            "concepts": {k: list(v) for k, v in sorted(state.concepts.items())},
        }
        labels = store.labels.get(session.corpus_id)
        if labels is not None:
            corpus = store.get_corpus(session.corpus_id)
            measured = evaluate_against_labels(state.rule, corpus, labels, state.concepts)
            payload["evaluation"] = measured.to_dict()
        return payload

    @app.get("/v1/rules/{rule_id}/events")
    def get_events(rule_id: str, since: int = 0):
        session = store.get_rule(rule_id)
        if since < 0:
            raise ApiError(400, "validation", "since must be non-negative")
        return {"events": session.events[since:], "next": len(session.events)}

    # --------------------------------------------------------------- tasks

    @app.get("/v1/tasks")
    def get_tasks(rule: str, round: int, page: int = 1):
        session = store.get_rule(rule)
        if page < 1:
            raise ApiError(400, "validation", "page starts at 1")
        pages = session.queue.pages(round)
        chosen = pages[page - 1] if page <= len(pages) else []
        _, resolved = session.queue.collect(round)
        return {
            "rule_id": rule,
            "round": round,
            "page": page,
            "pages": len(pages),
            "per_page": TASKS_PER_PAGE,
            "tasks": [t.to_dict() for t in chosen],
            "resolved": len(resolved),
        }

    # ------------------------------------------------------------ verdicts

    @app.post("/v1/verdicts")
    def post_verdicts(body: dict):
        rule_id = body.get("rule")
        if not rule_id:
            raise ApiError(400, "validation", "body needs 'rule'")
        session = store.get_rule(rule_id)
        entries = body.get("verdicts")
        if entries is None:
            entries = [body]
        if not isinstance(entries, list) or not entries:
            raise ApiError(400, "validation", "body needs a non-empty 'verdicts' list")
        results = []
        completed = None
        with store.lock:
            for entry in entries:
                for field_name in ("task_id", "worker_id", "answer"):
                    if not entry.get(field_name):
                        raise ApiError(400, "validation", f"verdict needs {field_name!r}")
                if entry["task_id"] not in session.queue.tasks:
                    raise _not_found("task", entry["task_id"])
                verdict = _validate(
                    Verdict,
                    task_id=entry["task_id"],
                    worker_id=entry["worker_id"],
                    answer=entry["answer"],
                    timestamp=float(entry.get("timestamp", 0.0)),
                )
                accepted = session.queue.submit(verdict)
                results.append(
                    {
                        "task_id": verdict.task_id,
                        "accepted": accepted,
                        "resolved": session.queue.resolutions.get(verdict.task_id),
                    }
                )
            pending = session.pending
            if pending is not None and session.feedback_mode == "human":
                done = sum(
                    1 for t in pending.tasks if t.task_id in session.queue.resolutions
                )
                if results and any(r["accepted"] for r in results):
                    session.event(
                        pending.round_no,
                        "verdict_progress",
                        done=done,
                        total=len(pending.tasks),
                    )
                if done == len(pending.tasks):
                    report = _validate(_finish_human_round, store, session)
                    completed = report.round
            store.save_rule(session)
        return {
            "rule_id": rule_id,
            "results": results,
            "cost_units": session.queue.cost_units,
            "round_completed": completed,
        }

    # ------------------------------------------------------------- ranking

    @app.post("/v1/rank")
    def post_rank(body: dict):
        if not body.get("corpus"):
            raise ApiError(400, "validation", "body needs 'corpus'")
        corpus = store.get_corpus(body["corpus"])
        if "preference" not in body:
            raise ApiError(400, "validation", "body needs 'preference'")
        top = body.get("top", 20)
        if not isinstance(top, int) or top < 1:
            raise ApiError(400, "validation", "top must be a positive integer")
        preference = _validate(Preference.from_dict, body["preference"])
        items = _validate(rank, preference, corpus, top)
        return {"items": [item.to_dict() for item in items], "count": len(items)}

    @app.post("/v1/concept-rule")
    def post_concept_rule(body: dict):
        if not body.get("corpus"):
            raise ApiError(400, "validation", "body needs 'corpus'")
        corpus = store.get_corpus(body["corpus"])
        expr = body.get("expr")
        if not expr or not isinstance(expr, str):
            raise ApiError(400, "validation", "body needs a non-empty 'expr'")
        top = body.get("top", 20)
        if not isinstance(top, int) or top < 1:
            raise ApiError(400, "validation", "top must be a positive integer")
        raw_concepts = body.get("concepts", [])
        if not isinstance(raw_concepts, list):
            raise ApiError(400, "validation", "'concepts' must be a list")
        concepts = {}
        for raw in raw_concepts:
            concept = _validate(Concept.from_dict, raw)
            concepts[concept.label] = concept
        items = _validate(eval_concept_rule, expr, concepts, corpus, top)
        return {"items": [item.to_dict() for item in items], "count": len(items)}

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "corpora": len(store.corpora), "rules": len(store.rules)}

    return app
