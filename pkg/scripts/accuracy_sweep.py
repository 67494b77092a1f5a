"""Seed-only vs densified median error over a range of root seeds.

    python3 scripts/accuracy_sweep.py --envs 10
"""
import argparse
import time

import numpy as np

from cellmap.localize import KNN, PROBABILISTIC
from cellmap.pipeline import RunConfig, run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--envs", type=int, default=10)
    ap.add_argument("--first-seed", type=int, default=0)
    args = ap.parse_args()

    cfg = RunConfig()
    gains = {KNN: [], PROBABILISTIC: []}
    wins = {KNN: 0, PROBABILISTIC: 0}
    t0 = time.perf_counter()
    print(f"{'seed':>5} {'k':>3} {'engine':>14} {'seed-only':>10} {'densified':>10} {'gain %':>8}")
    for seed in range(args.first_seed, args.first_seed + args.envs):
        res = run_pipeline(cfg.with_seed(seed))
        for engine, comp in res.comparisons.items():
            b, e = comp["baseline"].median, comp["enhanced"].median
            gains[engine].append(comp["improvement_percent"])
            wins[engine] += e < b
            print(f"{seed:>5} {res.densified.best_k:>3} {engine:>14} {b:>10.3f} {e:>10.3f} {comp['improvement_percent']:>8.1f}")
    print()
    for engine in (KNN, PROBABILISTIC):
        print(f"{engine}: densified better in {wins[engine]}/{args.envs}, mean gain {np.mean(gains[engine]):.1f}%")
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
