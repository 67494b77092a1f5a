"""Anchor density before and after densification on one simulated floor."""
import argparse

import numpy as np

from cellmap import evaluation as ev
from cellmap.densify import DensifyConfig, densify_radio_map, seed_radio_map
from cellmap.preprocess import SplitConfig
from cellmap.simulate import EnvironmentSpec, make_environment, sample_seed_set


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--seed-density", type=float, default=0.39)
    ap.add_argument("--target-density", type=float, default=11.49)
    args = ap.parse_args()

    env = make_environment(EnvironmentSpec(rng_seed=args.seed))
    seeds = sample_seed_set(env, args.seed_density, np.random.default_rng(args.seed))
    sparse = seed_radio_map(seeds, env.spec.bounds)
    res = densify_radio_map(
        seeds, DensifyConfig(target_density=args.target_density), SplitConfig(0.7, args.seed), env.spec.bounds
    )
    rep = ev.density_report(ev.anchor_density(sparse), ev.anchor_density(res.radio_map))
    print(f"seed anchors      {len(sparse):6d}  ({rep.before:.4f} per m^2)")
    print(f"densified anchors {len(res.radio_map):6d}  ({rep.after:.4f} per m^2)")
    print(f"coverage increase {rep.increase_percent:.1f}%")
    print(f"best k {res.best_k}, holdout RMSE {res.report.rmse_overall:.3f} ASU")
    for r in res.reports_per_k:
        print(f"  k={r.k:2d}  rmse={r.rmse_overall:.3f}")


if __name__ == "__main__":
    main()
