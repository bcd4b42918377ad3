#!/usr/bin/env python3
"""Empirical PAC coverage of the learner against the whitebox solver.

For each model, runs the learner over a block of seeds and reports how often
the exact value lies inside the final interval (the guarantee says: with
probability at least 1 - delta), plus width and runtime statistics.

Example:
    python scripts/coverage_study.py --seeds 20 models/*.mdp models/*.ctmdp
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time

from mppac.learn_ctmdp import on_demand_bvi_ctmdp
from mppac.learn_mdp import LearnerConfig, on_demand_bvi
from mppac.model import CTMDP, SampleOracle, load_model
from mppac.whitebox import exact_mean_payoff


def study(path: str, seeds: range, learner: LearnerConfig) -> dict:
    model = load_model(path)
    reference = exact_mean_payoff(model)
    learn = on_demand_bvi_ctmdp if model.kind == CTMDP else on_demand_bvi

    covered = 0
    widths, walls, episode_counts = [], [], []
    timeouts = 0
    for seed in seeds:
        config = LearnerConfig(
            epsilon_mp=learner.epsilon_mp,
            delta_mp=learner.delta_mp,
            episodes_per_round=learner.episodes_per_round,
            timeout_s=learner.timeout_s,
            seed=seed,
        )
        t0 = time.perf_counter()
        report = learn(SampleOracle(model, rng_seed=seed), config)
        walls.append(time.perf_counter() - t0)
        low, up = report.final
        widths.append(up - low)
        episode_counts.append(report.episodes)
        timeouts += report.timed_out
        if low - 1e-9 <= reference <= up + 1e-9:
            covered += 1
    return {
        "path": path,
        "reference": reference,
        "covered": covered,
        "runs": len(widths),
        "mean_width": statistics.fmean(widths),
        "max_width": max(widths),
        "mean_wall": statistics.fmean(walls),
        "max_wall": max(walls),
        "mean_episodes": statistics.fmean(episode_counts),
        "timeouts": timeouts,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("models", nargs="+", help="model files to study")
    ap.add_argument("--seeds", type=int, default=20, help="seeds 0..N-1 per model")
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--episodes-per-round", type=int, default=10_000)
    ap.add_argument("--timeout-s", type=float, default=120.0)
    args = ap.parse_args(argv)

    learner = LearnerConfig(
        epsilon_mp=args.epsilon,
        delta_mp=args.delta,
        episodes_per_round=args.episodes_per_round,
        timeout_s=args.timeout_s,
    )
    print(
        f"{'model':28s} {'exact':>9s} {'coverage':>9s} {'mean w':>8s} {'max w':>8s}"
        f" {'mean s':>7s} {'max s':>7s} {'mean eps':>9s} {'timeouts':>8s}"
    )
    worst_fraction = 1.0
    for path in args.models:
        row = study(path, range(args.seeds), learner)
        fraction = row["covered"] / row["runs"]
        worst_fraction = min(worst_fraction, fraction)
        print(
            f"{row['path']:28s} {row['reference']:9.5f} "
            f"{row['covered']:>4d}/{row['runs']:<4d} "
            f"{row['mean_width']:8.4f} {row['max_width']:8.4f} "
            f"{row['mean_wall']:7.1f} {row['max_wall']:7.1f} "
            f"{row['mean_episodes']:9.0f} {row['timeouts']:>8d}"
        )
    print(f"worst coverage fraction: {worst_fraction:.2f} (guarantee: >= {1 - args.delta:.2f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
