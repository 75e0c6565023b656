"""Breadth comparison: concept-level candidates vs raw keywords.

Runs the same adaptation twice, once with conceptual candidate features
enabled and once syntactic-only, and prints the round-by-round annotation
counts side by side.

    python3 scripts/breadth_comparison.py --docs 50000 --rounds 5
"""

import argparse

from rulebench.adapt import AdaptConfig, RunState, evaluate_against_labels, oracle_feedback, run_round
from rulebench.lang import parse_to_rule
from rulebench.synth import SynthConfig, build_corpus, generate


def run(data, corpus, kb, conceptual: bool, args) -> tuple[list, float]:
    config = AdaptConfig(seed=args.seed, sample_rate=args.sample_rate, conceptual=conceptual)
    rule = parse_to_rule(
        f"Tweets.Keyword.Contains('{data.config.hook_word}')",
        rule_id="breadth",
        tag=data.config.tag(),
        children_cap=config.children_cap,
    )
    state = RunState(rule=rule, corpus=corpus, config=config, kb=kb)
    feedback = oracle_feedback(data.labels)
    reports = [run_round(state, feedback) for _ in range(args.rounds)]
    measured = evaluate_against_labels(state.rule, corpus, data.labels, state.concepts)
    return reports, measured.precision or 0.0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=50000)
    parser.add_argument("--topics", type=int, default=3)
    parser.add_argument("--corpus-seed", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rounds", type=int, default=5)
    parser.add_argument("--sample-rate", type=float, default=0.03)
    args = parser.parse_args()

    data = generate(SynthConfig(docs=args.docs, topics=args.topics, seed=args.corpus_seed))
    corpus, kb = build_corpus(data)

    conceptual, concept_precision = run(data, corpus, kb, True, args)
    syntactic, keyword_precision = run(data, corpus, kb, False, args)

    print(f"{'round':>5}  {'concept':>9}  {'keyword':>9}  {'ratio':>6}")
    for with_concepts, keywords_only in zip(conceptual, syntactic):
        ratio = with_concepts.annotated / max(keywords_only.annotated, 1)
        print(
            f"{with_concepts.round:>5}  {with_concepts.annotated:>9}"
            f"  {keywords_only.annotated:>9}  {ratio:>6.2f}"
        )
    final_ratio = conceptual[-1].annotated / max(syntactic[-1].annotated, 1)
    print(
        f"final: {final_ratio:.2f}x breadth, measured precision"
        f" {concept_precision:.3f} (concept) vs {keyword_precision:.3f} (keyword)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
