"""Command line entry point: ``amgmatch {solve,bench,hierarchy-info}``.

Exit status: 0 success, 1 input error, 2 a solve did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import LABELS, CoarsestSolverSpec, PreconditionerConfig, StudySpec
from .hierarchy import build_hierarchy
from .mmio import MatrixMarketError, read_mm
from .multigrid import solve
from .partition import make_partition
from .problems import gen_poisson
from .smoothers import SmootherSpec
from .study import run_study, study_csv

EXIT_OK, EXIT_INPUT, EXIT_NONCONV = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _prec(value: str) -> str:
    label = value.upper()
    if label not in LABELS:
        raise argparse.ArgumentTypeError(
            f"unknown preconditioner {value!r} (choose from {', '.join(l.lower() for l in LABELS)})")
    return label


def _int_list(value: str):
    try:
        return [int(v) for v in str(value).split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _prec_list(value: str):
    return [_prec(v) for v in str(value).split(",") if v]


def _default_seed():
    env = os.environ.get("BENCH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"BENCH_SEED must be an integer, got {env!r}")


def _common(p, prec_type=_prec, prec_default="MLVSMATCH3"):
    p.add_argument("--prec", type=prec_type, default=prec_default,
                   help="mlvsmatch3 | mlvsmatch4 | mlvsbm | jacobi | none")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--ranks", type=_int_list, default=[1])
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $BENCH_SEED or 0)")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--sweeps", type=int, default=None, help="override matching sweeps")
    p.add_argument("--theta", type=float, default=0.08, help="MLVSBM strength threshold")
    p.add_argument("--omega", type=float, default=1.0, help="smoother damping")
    p.add_argument("--coarsest", choices=("fcg", "direct"), default="fcg")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="amgmatch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve A x = b for a MatrixMarket matrix")
    s.add_argument("--matrix", type=Path, required=True)
    s.add_argument("--rhs", type=Path, default=None,
                   help="whitespace-separated right-hand side (default: all ones)")
    _common(s)

    b = sub.add_parser("bench", help="strong/weak scaling study on Poisson proxies")
    b.add_argument("--config", type=Path, default=None, help="key=value file of defaults")
    b.add_argument("--problem", choices=("poisson1d", "poisson2d", "poisson3d"),
                   default="poisson3d")
    b.add_argument("--n", type=_int_list, default=[16], help="points per side, comma list")
    b.add_argument("--mode", choices=("strong", "weak"), default="strong")
    b.add_argument("--steps", type=int, default=20)
    b.add_argument("--partition", choices=("contiguous", "sfc_morton"), default="contiguous")
    _common(b, prec_type=_prec_list, prec_default=["MLVSMATCH3"])

    h = sub.add_parser("hierarchy-info", help="print the AMG hierarchy summary")
    h.add_argument("--matrix", type=Path, default=None)
    h.add_argument("--problem", choices=("poisson1d", "poisson2d", "poisson3d"),
                   default="poisson3d")
    h.add_argument("--n", type=int, default=16)
    _common(h)
    return ap


def _read_config_file(path: Path) -> dict:
    out = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _config(args, label) -> PreconditionerConfig:
    return PreconditionerConfig(label, matching_sweeps=args.sweeps, theta=args.theta,
                                smoother=SmootherSpec("hybrid_fgs", 4, args.omega),
                                coarsest=CoarsestSolverSpec(args.coarsest))


def _emit(obj, out: Path | None, suffix=".json"):
    text = json.dumps(obj, indent=1, default=float)
    if out is None:
        print(text)
    else:
        out = out if out.suffix else out.with_suffix(suffix)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    return out


def cmd_solve(args) -> int:
    A = read_mm(args.matrix)
    if args.rhs is not None:
        try:
            b = np.loadtxt(args.rhs, ndmin=1)
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read rhs: {exc}")
    else:
        b = np.ones(A.nrows)
    if b.shape != (A.nrows,):
        raise InputError(f"rhs has length {b.size}, matrix has {A.nrows} rows")
    ranks = args.ranks[0]
    owner = make_partition(A.nrows, ranks).owner
    x, rep = solve(A, b, _config(args, args.prec), args.tol, args.max_iters, owner=owner)
    d = rep.to_dict()
    d["n"] = A.nrows
    d["ranks"] = ranks
    _emit(d, args.out)
    return EXIT_OK if rep.converged else EXIT_NONCONV


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.mode == "weak" and len(args.n) != len(args.ranks):
        raise InputError("weak mode pairs each --n with one --ranks entry")
    spec = StudySpec(mode=args.mode, problem=args.problem, sizes=tuple(args.n),
                     ranks=tuple(args.ranks), tol=args.tol, max_iters=args.max_iters,
                     time_steps=args.steps, seed=seed, partition=args.partition)
    report = run_study(spec, [_config(args, p) for p in args.prec])
    if args.out is None:
        print(json.dumps(report, indent=1))
    else:
        base = args.out.with_suffix("") if args.out.suffix == ".json" else args.out
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".json").write_text(json.dumps(report, indent=1) + "\n")
        base.with_suffix(".csv").write_text(study_csv(report))
    return EXIT_OK if report["all_converged"] else EXIT_NONCONV


def cmd_hierarchy_info(args) -> int:
    if args.matrix is not None:
        A = read_mm(args.matrix)
    else:
        A, _ = gen_poisson(int(args.problem[-2]), args.n)
    cfg = _config(args, args.prec)
    if not cfg.is_amg:
        raise InputError(f"{cfg.label} has no hierarchy")
    owner = make_partition(A.nrows, args.ranks[0]).owner
    _emit(build_hierarchy(A, cfg, owner).summary(), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is not None:
        try:
            defaults = _read_config_file(args.config)
        except InputError as exc:
            print(f"amgmatch: error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        bench = parser._subparsers._group_actions[0].choices["bench"]
        known = {a.dest for a in bench._actions}
        unknown = set(defaults) - known
        if unknown:
            print(f"amgmatch: error: unknown config keys {sorted(unknown)}", file=sys.stderr)
            return EXIT_INPUT
        # explicit flags still win; argparse type-converts string defaults
        bench.set_defaults(**defaults)
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"solve": cmd_solve, "bench": cmd_bench, "hierarchy-info": cmd_hierarchy_info}
    try:
        return handlers[args.command](args)
    except (InputError, MatrixMarketError, ValueError, OSError) as exc:
        print(f"amgmatch: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
