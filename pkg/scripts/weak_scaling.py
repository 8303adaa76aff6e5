#!/usr/bin/env python3
"""Weak scaling on the 3D Poisson proxy: fixed rows per simulated rank.

    python3 scripts/weak_scaling.py --out results/weak
"""
import argparse
import json
import logging
from pathlib import Path

from amgmatch.config import PreconditionerConfig, StudySpec
from amgmatch.study import run_study, study_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32", help="points per side")
    ap.add_argument("--ranks", default="1,8", help="one rank count per size")
    ap.add_argument("--prec", default="MLVSMATCH3,MLVSMATCH4,MLVSBM")
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--partition", default="sfc_morton")
    ap.add_argument("--out", type=Path, default=Path("results/weak"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = StudySpec(mode="weak", problem="poisson3d",
                     sizes=[int(s) for s in args.sizes.split(",")],
                     ranks=[int(r) for r in args.ranks.split(",")],
                     tol=args.tol, time_steps=args.steps, seed=args.seed,
                     partition=args.partition)
    report = run_study(spec, [PreconditionerConfig(p) for p in args.prec.split(",")])

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.with_suffix(".json").write_text(json.dumps(report, indent=1) + "\n")
    args.out.with_suffix(".csv").write_text(study_csv(report))

    print(f"{'config':<11} {'n':>4} {'ranks':>5} {'avg it':>7} {'s/it':>9} {'scaled Sp':>9}")
    for c in report["cells"]:
        print(f"{c['config']:<11} {c['n']:>4} {c['ranks']:>5} {c['avg_iters']:>7.2f} "
              f"{c['time_per_iter_s']:>9.4f} {c['scaled_speedup']:>9.2f}")


if __name__ == "__main__":
    main()
