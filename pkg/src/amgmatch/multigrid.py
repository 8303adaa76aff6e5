"""V-cycle application, the coarsest-level solver and preconditioner setup."""
from __future__ import annotations

import time

import numpy as np
import scipy.sparse.linalg as spla

from .config import CoarsestSolverSpec, PreconditionerConfig
from .hierarchy import AmgHierarchy, build_hierarchy
from .krylov import cg_solve, fcg_solve
from .smoothers import BlockJacobiILU1, hybrid_gs_apply
from .sparse import CsrMatrix

__all__ = ["CoarsestSolver", "VCycle", "v_cycle_apply", "make_preconditioner", "solve"]


class CoarsestSolver:
    """FCG preconditioned by block-Jacobi/ILU(1) (default) or a sparse LU."""

    def __init__(self, A: CsrMatrix, owner, spec: CoarsestSolverSpec):
        self.A = A
        self.spec = spec
        self.last_report = None
        if spec.method == "direct":
            self._lu = spla.splu(A.scipy().tocsc())
        else:
            self._bj = BlockJacobiILU1(A, owner)

    def __call__(self, r) -> np.ndarray:
        if self.spec.method == "direct":
            return self._lu.solve(np.asarray(r, dtype=np.float64))
        x, self.last_report = fcg_solve(self.A, r, self._bj, tol=self.spec.rel_tol,
                                        max_iters=self.spec.max_iters)
        return x


class VCycle:
    """``z = B r`` for the multiplicative V-cycle of an :class:`AmgHierarchy`.

    Pre-smoothing is the hybrid forward Gauss-Seidel smoother, post-smoothing
    the backward one, so ``B`` is symmetric whenever the coarsest solve is an
    exact linear operator.
    """

    def __init__(self, h: AmgHierarchy):
        self.h = h
        self._R = [lv.P.P.scipy().T.tocsr() for lv in h.levels]
        self.coarse = CoarsestSolver(h.coarsest_A, h.coarsest_owner, h.coarsest)

    def _cycle(self, l, b):
        h = self.h
        if l == len(h.levels):
            if b.shape != (h.coarsest_A.nrows,):
                raise ValueError("dimension mismatch at the coarsest level")
            return self.coarse(b)
        lv = h.levels[l]
        if b.shape != (lv.A.nrows,):
            raise ValueError(f"dimension mismatch at level {l}")
        x = hybrid_gs_apply(lv.A, lv.owner, lv.smoother, b, "forward", diag=lv.diag)
        rc = self._R[l] @ (b - lv.A.scipy() @ x)
        x += lv.P.P.scipy() @ self._cycle(l + 1, rc)
        return hybrid_gs_apply(lv.A, lv.owner, lv.smoother, b, "backward", x0=x,
                               diag=lv.diag)

    def __call__(self, r) -> np.ndarray:
        return self._cycle(0, np.asarray(r, dtype=np.float64))


def v_cycle_apply(h: AmgHierarchy, r) -> np.ndarray:
    return VCycle(h)(r)


def make_preconditioner(A: CsrMatrix, config: PreconditionerConfig, owner=None):
    """Return ``(apply, hierarchy_or_None, setup_seconds)``."""
    t0 = time.perf_counter()
    if config.label == "NONE":
        return None, None, time.perf_counter() - t0
    if config.label == "JACOBI":
        inv = 1.0 / A.diagonal()
        return (lambda r: inv * r), None, time.perf_counter() - t0
    h = build_hierarchy(A, config, owner)
    vc = VCycle(h)
    return vc, h, time.perf_counter() - t0


def solve(A: CsrMatrix, b, config: PreconditionerConfig, tol=1e-3, max_iters=1000,
          x0=None, owner=None, prec=None, setup_seconds=None):
    """Solve with the recipe in ``config``.

    AMG recipes run FCG with the V-cycle; ``JACOBI`` and ``NONE`` run plain
    CG. A prebuilt ``prec`` (from :func:`make_preconditioner`) skips setup.
    """
    if prec is None and setup_seconds is None:
        prec, _, setup_seconds = make_preconditioner(A, config, owner)
    if config.is_amg:
        x, rep = fcg_solve(A, b, prec, tol=tol, max_iters=max_iters, x0=x0)
    else:
        x, rep = cg_solve(A, b, config.label.lower(), tol=tol, max_iters=max_iters, x0=x0)
    rep.setup_seconds = float(setup_seconds or 0.0)
    rep.config["preconditioner"] = config.label
    return x, rep
