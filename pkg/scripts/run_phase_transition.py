#!/usr/bin/env python3
"""Phase transition of noiseless nuclear-norm recovery.

Sweeps the measurement count over multiples of n*r for a gaussian ensemble
and reports where the empirical success rate crosses 1/2.
"""

import argparse

from lowrankrec.bench import (ExperimentConfig, GridCell, emit,
                              run_experiment)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--multipliers", default="2,3,4,5,6,8",
                    help="comma-separated m/(n r) values")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/phase_transition")
    args = ap.parse_args()

    mults = [float(t) for t in args.multipliers.split(",")]
    cells = tuple(GridCell(n=args.n, r=args.r, m=int(round(c * args.n * args.r)))
                  for c in mults)
    cfg = ExperimentConfig(experiment="phase-transition", cells=cells,
                           trials=args.trials, seed=args.seed)
    result = run_experiment(cfg, jobs=args.jobs)
    for path in emit(result, args.out, fmt="both", plot=True):
        print(f"wrote {path}")

    crossing = None
    for mult, cell in zip(mults, result.cells):
        print(f"m = {cell.m:5d} ({mult:g} nr): success rate {cell.success_rate:.2f}")
        if crossing is None and cell.success_rate >= 0.5:
            crossing = mult
    if crossing is None:
        print("success rate never reached 1/2 on this grid")
    else:
        print(f"success rate crosses 1/2 by m = {crossing:g} nr")


if __name__ == "__main__":
    main()
