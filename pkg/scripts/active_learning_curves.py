#!/usr/bin/env python3
"""Preference-learning experiment: MI-selected vs random queries.

Writes a CSV of per-round weight-estimation errors, one row per
(selection, seed, round), mirroring the batch harness format.
"""

import argparse

import numpy as np

from prefmoo.harness import run_preference_loop


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--objectives", type=int, default=3)
    parser.add_argument("--rounds", type=int, default=30)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--sigma-pc", type=float, default=0.1)
    parser.add_argument("--sigma-ir", type=float, default=0.1)
    parser.add_argument("--out", default="active_learning.csv")
    args = parser.parse_args()

    lines = ["selection,seed,round,w_error"]
    summary = {}
    for selection in ("mi", "random"):
        curves = []
        for seed in range(args.seeds):
            errs = run_preference_loop(
                L=args.objectives, rounds=args.rounds, selection=selection,
                seed=seed, sigma_pc=args.sigma_pc, sigma_ir=args.sigma_ir)
            curves.append(errs)
            lines.extend(f"{selection},{seed},{r + 1},{e!r}"
                         for r, e in enumerate(errs))
        summary[selection] = np.mean(curves, axis=0)
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for sel, mean in summary.items():
        print(f"{sel:>6}: " + " ".join(f"{e:.3f}" for e in mean[::5]))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
