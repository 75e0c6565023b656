"""Arm-selection convergence: how quickly posterior sampling locks onto the
best arm among fixed Bernoulli payouts.

    python3 scripts/bandit_convergence.py --arms 0.9,0.5,0.3 --rounds 500 --seeds 20
"""

import argparse
import random

from rulebench.bandit import sample_theta, top_k


def simulate(probabilities: dict[str, float], rounds: int, seed: int, tail: int) -> float:
    counts = {arm: (0, 0) for arm in probabilities}
    world = random.Random(f"world:{seed}")
    best = max(probabilities, key=probabilities.get)
    hits = 0
    for t in range(rounds):
        estimate = sample_theta(counts, f"{seed}:{t}")
        arm = top_k(estimate, 1)[0]
        if t >= rounds - tail and arm == best:
            hits += 1
        r, d = counts[arm]
        if world.random() < probabilities[arm]:
            counts[arm] = (r + 1, d)
        else:
            counts[arm] = (r, d + 1)
    return hits / tail


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--arms", default="0.9,0.5,0.3", help="comma-separated payout rates")
    parser.add_argument("--rounds", type=int, default=500)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--tail", type=int, default=100, help="window for the pick rate")
    args = parser.parse_args()

    rates = [float(p) for p in args.arms.split(",") if p.strip()]
    probabilities = {f"arm{i}": p for i, p in enumerate(rates)}
    print(f"arms: {probabilities}")

    pick_rates = []
    for seed in range(args.seeds):
        rate = simulate(probabilities, args.rounds, seed, args.tail)
        pick_rates.append(rate)
        print(f"seed {seed}: best arm picked in {rate:.0%} of the final {args.tail} rounds")
    average = sum(pick_rates) / len(pick_rates)
    print(f"average over {args.seeds} seeds: {average:.1%}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
