#!/usr/bin/env python3
"""Regret curves for all methods on one benchmark (the main comparison plot's
data).  Thin wrapper over the sweep CLI defaults with per-iteration means."""

import argparse

import numpy as np

from prefmoo.harness import ExperimentConfig, aggregate, run_experiment, write_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--benchmark", default="schaffer2")
    parser.add_argument("--methods",
                        default="proposed,random,mobo-rs,ei-tp")
    parser.add_argument("--iters", type=int, default=30)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--out-prefix", default="regret")
    args = parser.parse_args()

    for method in args.methods.split(","):
        cfg = ExperimentConfig(benchmark=args.benchmark, method=method.strip(),
                               iters=args.iters, seeds=tuple(range(args.seeds)))
        traces = run_experiment(cfg)
        path = f"{args.out_prefix}_{args.benchmark}_{cfg.method}.csv"
        write_csv(traces, path)
        agg = aggregate(traces)["regret"]
        marks = np.linspace(0, args.iters - 1, 7, dtype=int)
        curve = " ".join(f"{agg['mean'][i]:.3f}" for i in marks)
        print(f"{cfg.method:>12}: {curve}  -> {path}")


if __name__ == "__main__":
    main()
