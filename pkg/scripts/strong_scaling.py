#!/usr/bin/env python3
"""Strong scaling and mesh refinement ladder on the 3D Poisson proxy.

Ranks are simulated inside one process, so the speedup column only checks
the bookkeeping; the iteration columns are what the study is about.

    python3 scripts/strong_scaling.py --sizes 16,32,64 --ranks 1
    python3 scripts/strong_scaling.py --sizes 32 --ranks 1,2,4,8
"""
import argparse
import json
import logging
from pathlib import Path

from amgmatch.config import PreconditionerConfig, StudySpec
from amgmatch.study import run_study, study_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32,64")
    ap.add_argument("--ranks", default="1")
    ap.add_argument("--prec", default="MLVSMATCH3,MLVSMATCH4,MLVSBM,JACOBI")
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/strong"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = StudySpec(mode="strong", problem="poisson3d",
                     sizes=[int(s) for s in args.sizes.split(",")],
                     ranks=[int(r) for r in args.ranks.split(",")],
                     tol=args.tol, max_iters=2000, time_steps=args.steps, seed=args.seed)
    report = run_study(spec, [PreconditionerConfig(p) for p in args.prec.split(",")])

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.with_suffix(".json").write_text(json.dumps(report, indent=1) + "\n")
    args.out.with_suffix(".csv").write_text(study_csv(report))

    print(f"{'config':<11} {'n':>4} {'ranks':>5} {'levels':>6} {'avg it':>7} "
          f"{'setup s':>8} {'solve s':>8} {'Sp':>6}")
    for c in report["cells"]:
        levels = c.get("hierarchy", {}).get("n_levels", "-")
        print(f"{c['config']:<11} {c['n']:>4} {c['ranks']:>5} {levels:>6} {c['avg_iters']:>7.2f} "
              f"{c['setup_s']:>8.2f} {c['total_solve_s']:>8.2f} {c['speedup']:>6.2f}")


if __name__ == "__main__":
    main()
