"""Strong/weak scaling studies on Poisson proxies at desk scale.

Ranks are simulated in-process, so wall-clock speedups here only reflect the
arithmetic of the definitions; iteration counts are the meaningful output.
"""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict

import numpy as np

from .config import PreconditionerConfig, StudySpec
from .multigrid import make_preconditioner, solve
from .partition import (assemble_full_rows, discover_halo, make_partition,
                        partial_row_assembly)
from .problems import exact_solution, poisson_elements, smooth_perturbation

log = logging.getLogger(__name__)

CSV_COLUMNS = ("config", "problem", "n", "ranks", "step", "iters", "solve_s", "setup_s")
TIMING_KEYS = frozenset({"setup_s", "solve_s", "total_solve_s", "time_per_iter_s",
                         "speedup", "scaled_speedup", "scaled_efficiency",
                         "setup_seconds", "solve_seconds", "wall_s"})
RHS_MODEL = ("proxy: seeded Gaussian-bump perturbations of A x*, each step "
             "warm-started from the previous solution; not a flow field")


def assemble_problem(dim, n, n_ranks, scheme="contiguous"):
    """Element-wise partial-row assembly converted to full rows.

    Returns ``(A, b, partition, full_row_matrix)``.
    """
    N = n ** dim
    part = make_partition(N, n_ranks, scheme, grid_dims=(n,) * dim
                          if scheme == "sfc_morton" else None)
    pm = partial_row_assembly(poisson_elements(dim, n), part)
    part = discover_halo(pm, part)
    full = assemble_full_rows(pm, part)
    A = full.to_global()
    return A, A @ exact_solution(dim, n), part, full


def run_cell(spec: StudySpec, config: PreconditionerConfig, n: int, n_ranks: int) -> dict:
    A, b, part, full = assemble_problem(spec.dim, n, n_ranks, spec.partition)
    prec, h, setup_s = make_preconditioner(A, config, part.owner)
    rng = np.random.default_rng(spec.seed)
    amp = spec.perturbation * float(np.abs(b).max())
    # unperturbed solve stands in for the pre-processing phase; not counted
    x, _ = solve(A, b, config, spec.tol, spec.max_iters, prec=prec, setup_seconds=setup_s)
    steps = []
    for k in range(spec.time_steps):
        bk = b + amp * smooth_perturbation(spec.dim, n, rng)
        x, rep = solve(A, bk, config, spec.tol, spec.max_iters, x0=x, prec=prec,
                       setup_seconds=setup_s)
        steps.append({"step": k, "iters": rep.iterations, "converged": rep.converged,
                      "final_residual": rep.residual_history[-1],
                      "solve_s": rep.solve_seconds})
    iters = [s["iters"] for s in steps]
    total = sum(s["solve_s"] for s in steps)
    cell = {
        "config": config.label, "problem": spec.problem, "n": n, "rows": A.nrows,
        "ranks": n_ranks, "setup_s": setup_s, "total_solve_s": total,
        "total_iters": int(sum(iters)), "avg_iters": float(np.mean(iters)),
        "time_per_iter_s": total / max(1, sum(iters)),
        "converged": all(s["converged"] for s in steps),
        "halo_messages": len(part.messages) + len(full.messages),
        "halo_volume": part.message_volume() + sum(m.n_entries for m in full.messages),
        "steps": steps,
    }
    if h is not None:
        cell["hierarchy"] = h.summary()
    if not cell["converged"]:
        log.warning("%s n=%d ranks=%d: some steps did not converge", config.label, n, n_ranks)
    return cell


def _speedups(spec: StudySpec, cells):
    """Strong: ``T_min_p / T_p`` per (config, n). Weak: ``scal * T_min_p / T_p``."""
    groups = {}
    for c in cells:
        key = (c["config"], c["n"]) if spec.mode == "strong" else (c["config"],)
        groups.setdefault(key, []).append(c)
    for group in groups.values():
        base = min(group, key=lambda c: c["ranks"])
        for c in group:
            ratio = base["total_solve_s"] / c["total_solve_s"] if c["total_solve_s"] else float("nan")
            if spec.mode == "strong":
                c["speedup"] = ratio
            else:
                c["scalfactor"] = c["ranks"] / base["ranks"]
                c["scaled_efficiency"] = ratio
                c["scaled_speedup"] = c["scalfactor"] * ratio


def run_study(spec: StudySpec, configs) -> dict:
    cells = []
    t0 = time.perf_counter()
    for config in configs:
        for n, r in spec.cells():
            log.info("cell %s n=%d ranks=%d", config.label, n, r)
            cells.append(run_cell(spec, config, n, r))
    _speedups(spec, cells)
    return {
        "study": asdict(spec),
        "configs": [c.to_dict() for c in configs],
        "rhs_model": RHS_MODEL,
        "residual_norm": "relative to initial residual",
        "cells": cells,
        "all_converged": all(c["converged"] for c in cells),
        "wall_s": time.perf_counter() - t0,
    }


def study_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in report["cells"]:
        for s in c["steps"]:
            w.writerow([c["config"], c["problem"], c["n"], c["ranks"], s["step"],
                        s["iters"], f"{s['solve_s']:.6g}", f"{c['setup_s']:.6g}"])
    return buf.getvalue()


def strip_timings(obj):
    """Copy of a report without wall-clock fields (for determinism checks)."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj
