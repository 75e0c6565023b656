"""Command-line driver for headless runs and experiment reproduction.

Exit codes: 0 success, 1 usage error, 2 data error. Every JSON artifact
records the seed it was produced with.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .adapt import (
    AdaptConfig,
    AdaptError,
    RunState,
    evaluate_against_labels,
    oracle_feedback,
    run_round,
)
from .bandit import BanditError, VERDICTS, VERDICT_UNKNOWN
from .corpus import Corpus, CorpusError, load_labels
from .feedback import FeedbackError, Verdict
from .knowledge import KnowledgeBase, KnowledgeError
from .lang import NormalizeError, ParseError, dump_rule_file, load_rule_file, render
from .rank import Preference, RankError, rank
from .rules import RuleError
from .summarize import KINDS, DEFAULT_WEDGES, SummarizeError, build_summaries
from .synth import SynthConfig, SynthError, generate, write_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_DATA_ERRORS = (
    CorpusError,
    KnowledgeError,
    RuleError,
    ParseError,
    NormalizeError,
    AdaptError,
    BanditError,
    FeedbackError,
    RankError,
    SummarizeError,
    SynthError,
    OSError,
    json.JSONDecodeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; route through UsageError instead
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------------- helpers


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise CorpusError(f"{what} not found: {path}")
    return path


def _require_dir(path: str, what: str) -> str:
    if not os.path.isdir(path):
        raise KnowledgeError(f"{what} not found: {path}")
    return path


def _load_corpus(path: str) -> Corpus:
    corpus = Corpus()
    corpus.ingest_file(_require_file(path, "corpus file"))
    return corpus


def _load_kb(args) -> KnowledgeBase:
    lexicon = getattr(args, "lexicon", None)
    if lexicon is None:
        return KnowledgeBase()
    return KnowledgeBase.load_dir(_require_dir(lexicon, "lexicon directory"))


def write_artifact(out_dir: str, name: str, payload: dict, seed: int) -> str:
    """One JSON artifact; key order and layout are fixed so reruns match."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    body = {"seed": seed}
    body.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return path


def load_config_file(path: str) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment."""
    values: dict[str, str] = {}
    with open(_require_file(path, "config file"), encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip() or not value.strip():
                raise CorpusError(f"{path}:{lineno}: expected `key = value`")
            values[key.strip()] = value.strip()
    return values


_ADAPT_FIELDS = {f.name: f for f in dataclasses.fields(AdaptConfig)}


def _coerce(name: str, text: str):
    default = _ADAPT_FIELDS[name].default
    if isinstance(default, bool):
        lowered = text.casefold()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise CorpusError(f"config key {name!r} wants a boolean, got {text!r}")
    try:
        return type(default)(text)
    except ValueError as exc:
        raise CorpusError(f"config key {name!r}: {exc}") from exc


def build_adapt_config(args) -> AdaptConfig:
    """Defaults, then config file values, then explicit flags."""
    kwargs = {}
    config_path = getattr(args, "config", None)
    if config_path:
        for key, value in load_config_file(config_path).items():
            if key not in _ADAPT_FIELDS:
                raise CorpusError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, value)
    for name in _ADAPT_FIELDS:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            kwargs[name] = flag_value
    return AdaptConfig(**kwargs)


def _add_adapt_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--precision-threshold", dest="precision_threshold", type=float)
    parser.add_argument("--children-cap", dest="children_cap", type=int)
    parser.add_argument("--sample-rate", dest="sample_rate", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--window", type=int)
    parser.add_argument("--min-evidence", dest="min_evidence", type=int)
    parser.add_argument("--quorum", type=int)
    parser.add_argument("--conceptual", dest="conceptual", action="store_true", default=None)
    parser.add_argument("--syntactic-only", dest="conceptual", action="store_false")


# ------------------------------------------------------------------ commands


def cmd_ingest(args) -> int:
    corpus = Corpus()
    added, warnings = corpus.ingest_file(_require_file(args.corpus, "corpus file"))
    stats = corpus.stats()
    write_artifact(
        args.out,
        "corpus_stats.json",
        {
            "documents": stats.doc_count,
            "terms": stats.term_count(),
            "warnings": warnings,
        },
        args.seed,
    )
    print(f"ingested {added} documents, {stats.term_count()} index terms")
    return EXIT_OK


def cmd_summarize(args) -> int:
    corpus = _load_corpus(args.corpus)
    kb = _load_kb(args)
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    if not kinds:
        raise UsageError("--kinds needs at least one kind")
    try:
        summary = build_summaries(corpus, kb, kinds, args.wedges)
    except ValueError as exc:
        raise SummarizeError(str(exc)) from exc
    write_artifact(args.out, "summaries.json", summary.to_dict(), args.seed)
    built = {k: len(v) for k, v in summary.kinds.items()}
    print(f"summaries: {built}" + (f" errors: {summary.errors}" if summary.errors else ""))
    return EXIT_OK


def _load_scripted_answers(path: str) -> dict[str, str]:
    answers: dict[str, str] = {}
    with open(_require_file(path, "verdicts file"), encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FeedbackError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if "doc" not in record or "answer" not in record:
                raise FeedbackError(f"{path}:{lineno}: record needs 'doc' and 'answer'")
            if record["answer"] not in VERDICTS:
                raise FeedbackError(f"{path}:{lineno}: unknown answer {record['answer']!r}")
            answers[str(record["doc"])] = record["answer"]
    return answers


def scripted_feedback(answers: dict[str, str]):
    """Replay canned per-document answers; unlisted documents get Unknown."""

    def supply(tasks):
        return [
            Verdict(
                task_id=task.task_id,
                worker_id="script",
                answer=answers.get(task.doc_id, VERDICT_UNKNOWN),
                timestamp=float(task.round),
            )
            for task in tasks
        ]

    return supply


def _round_line(report: dict) -> str:
    precision = report["overall_precision"]
    shown = f"{precision:.3f}" if precision is not None else "-"
    return (
        f"round {report['round']}: annotated={report['annotated']}"
        f" sampled={report['sample_size']} precision={shown}"
        f" actions={len(report['actions'])} stabilized={len(report['stabilized_paths'])}"
    )


def cmd_run(args) -> int:
    config = build_adapt_config(args)
    corpus = _load_corpus(args.corpus)
    kb = _load_kb(args)
    rule_id = os.path.splitext(os.path.basename(args.rule))[0]
    rule = load_rule_file(
        _require_file(args.rule, "rule file"), rule_id=rule_id, children_cap=config.children_cap
    )
    labels = None
    if args.labels:
        labels = load_labels(_require_file(args.labels, "labels file"))
    if args.feedback == "oracle":
        if labels is None:
            raise UsageError("--feedback oracle needs --labels")
        feedback = oracle_feedback(labels)
    else:
        if not args.verdicts:
            raise UsageError("--feedback scripted needs --verdicts")
        feedback = scripted_feedback(_load_scripted_answers(args.verdicts))
    if args.rounds < 1:
        raise UsageError("--rounds must be at least 1")

    state = RunState(rule=rule, corpus=corpus, config=config, kb=kb)
    rounds = []
    for _ in range(args.rounds):
        report = run_round(state, feedback)
        rounds.append(report.to_dict())
        print(_round_line(rounds[-1]))

    payload = {
        "tag": state.rule.tag,
        "config": config.to_dict(),
        "rounds": rounds,
        "final_rule": render(state.rule),
        "concepts": {name: list(members) for name, members in sorted(state.concepts.items())},
        "total_cost": state.total_cost,
    }
    if labels is not None:
        measured = evaluate_against_labels(state.rule, corpus, labels, state.concepts)
        payload["evaluation"] = measured.to_dict()
        shown = f"{measured.precision:.3f}" if measured.precision is not None else "-"
        print(f"final precision against labels: {shown}")
    write_artifact(args.out, "reports.json", payload, config.seed)
    dump_rule_file(state.rule, os.path.join(args.out, "rule_final.txt"))
    return EXIT_OK


def cmd_rank(args) -> int:
    corpus = _load_corpus(args.corpus)
    with open(_require_file(args.preference, "preference file"), encoding="utf-8") as fh:
        preference = Preference.from_dict(json.load(fh))
    items = [item.to_dict() for item in rank(preference, corpus, args.top)]
    if args.out:
        write_artifact(args.out, "ranking.json", {"items": items}, args.seed)
    print(json.dumps(items, sort_keys=True, indent=2))
    return EXIT_OK


_TABLE_COLUMNS = (
    ("round", 5),
    ("annotated", 9),
    ("eligible", 8),
    ("sampled", 7),
    ("verdicts", 8),
    ("precision", 9),
    ("actions", 7),
    ("stabilized", 10),
)


def render_report_table(payload: dict) -> str:
    header = "  ".join(name.rjust(width) for name, width in _TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for report in payload["rounds"]:
        precision = report["overall_precision"]
        row = {
            "round": str(report["round"]),
            "annotated": str(report["annotated"]),
            "eligible": str(report["eligible"]),
            "sampled": str(report["sample_size"]),
            "verdicts": str(report["verdicts_consumed"]),
            "precision": f"{precision:.3f}" if precision is not None else "-",
            "actions": str(len(report["actions"])),
            "stabilized": str(len(report["stabilized_paths"])),
        }
        lines.append("  ".join(row[name].rjust(width) for name, width in _TABLE_COLUMNS))
    evaluation = payload.get("evaluation")
    if evaluation and evaluation.get("precision") is not None:
        lines.append("")
        lines.append(f"measured precision: {evaluation['precision']:.3f}")
        if evaluation.get("recall") is not None:
            lines.append(f"measured recall:    {evaluation['recall']:.3f}")
    return "\n".join(lines)


def cmd_report(args) -> int:
    path = os.path.join(args.run, "reports.json") if os.path.isdir(args.run) else args.run
    with open(_require_file(path, "reports file"), encoding="utf-8") as fh:
        payload = json.load(fh)
    if "rounds" not in payload:
        raise CorpusError(f"{path}: not a run report (missing 'rounds')")
    table = render_report_table(payload)
    print(table)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    kb = _load_kb(args)
    app = create_app(workspace=args.workspace, kb=kb)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_synth(args) -> int:
    config = SynthConfig(
        docs=args.docs,
        topics=args.topics,
        seed=args.seed,
        signal_vocab=args.signal_vocab,
        signals_per_doc=args.signals_per_doc,
        noise_vocab=args.noise_vocab,
        noise_per_doc=args.noise_per_doc,
        hook_in_topic=args.hook_in_topic,
        seed_precision=args.seed_precision,
    )
    paths = write_corpus(generate(config), args.out)
    print(f"wrote {config.docs} documents to {paths['corpus']}")
    return EXIT_OK


# --------------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="rulebench", description="Adaptive curation-rule workbench")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("ingest", help="index a JSONL corpus and report stats")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("summarize", help="build concept summaries")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--kinds", default=",".join(KINDS))
    p.add_argument("--wedges", type=int, default=DEFAULT_WEDGES)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("run", help="run adaptation rounds against feedback")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--labels")
    p.add_argument("--lexicon")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--feedback", choices=("oracle", "scripted"), required=True)
    p.add_argument("--verdicts", help="JSONL {doc, answer} for scripted feedback")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    _add_adapt_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rank", help="rank documents for a concept preference")
    p.add_argument("--corpus", required=True)
    p.add_argument("--preference", required=True)
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("report", help="render a run's per-round precision table")
    p.add_argument("--run", required=True, help="run output directory or reports.json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("RULEBENCH_PORT", "8000")))
    p.add_argument("--workspace", default=os.environ.get("RULEBENCH_WORKSPACE"))
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--docs", type=int, default=50000)
    p.add_argument("--topics", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--signal-vocab", dest="signal_vocab", type=int, default=60)
    p.add_argument("--signals-per-doc", dest="signals_per_doc", type=int, default=3)
    p.add_argument("--noise-vocab", dest="noise_vocab", type=int, default=400)
    p.add_argument("--noise-per-doc", dest="noise_per_doc", type=int, default=4)
    p.add_argument("--hook-in-topic", dest="hook_in_topic", type=float, default=0.8)
    p.add_argument("--seed-precision", dest="seed_precision", type=float, default=0.55)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
