"""Conjugate gradient and flexible conjugate gradient.

Both stop when ``||b - A x||_2 <= tol * ||b - A x0||_2``, i.e. relative to the
initial residual, and recompute the true residual every
``TRUE_RESIDUAL_EVERY`` iterations.
"""
from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .sparse import CsrMatrix, NotSPDError, spmv

TRUE_RESIDUAL_EVERY = 25


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    residual_norm: str = "initial"
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text) -> "SolveReport":
        return cls(**json.loads(text))


def _start(A, b, x0):
    b = np.asarray(b, dtype=np.float64)
    if A.nrows != A.ncols or b.shape != (A.nrows,):
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has {b.shape}")
    x = np.zeros(A.nrows) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != b.shape:
        raise ValueError("x0 has the wrong length")
    r = b - spmv(A, x)
    return b, x, r


def _jacobi(A):
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotSPDError("Jacobi preconditioning needs a positive diagonal")
    inv = 1.0 / d
    return lambda r: inv * r


def cg_solve(A: CsrMatrix, b, prec="none", tol=1e-3, max_iters=1000, x0=None,
             callback=None):
    """Preconditioned CG with ``prec`` in {"none", "jacobi"} or a callable.

    Returns ``(x, SolveReport)``. Non-convergence within ``max_iters`` is
    reported, not raised; a non-positive curvature ``p^T A p`` raises
    :class:`NotSPDError`.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if callable(prec):
        M = prec
    elif prec == "none":
        M = None
    elif prec == "jacobi":
        M = _jacobi(A)
    else:
        raise ValueError(f"unknown CG preconditioner {prec!r}")
    t0 = time.perf_counter()
    b, x, r = _start(A, b, x0)
    rep = SolveReport(config={"method": "cg", "prec": prec if isinstance(prec, str) else "custom",
                              "tol": tol, "max_iters": max_iters})
    r0 = np.linalg.norm(r)
    rep.residual_history.append(1.0)
    if r0 == 0.0:
        rep.converged = True
        rep.solve_seconds = time.perf_counter() - t0
        return x, rep
    z = r.copy() if M is None else M(r)
    p = z.copy()
    rz = r @ z
    for k in range(1, max_iters + 1):
        q = spmv(A, p)
        pq = p @ q
        if not pq > 0:
            raise NotSPDError(f"CG breakdown at iteration {k}: p^T A p = {pq:.3e}")
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if k % TRUE_RESIDUAL_EVERY == 0:
            r = b - spmv(A, x)
        rel = np.linalg.norm(r) / r0
        rep.residual_history.append(float(rel))
        rep.iterations = k
        if callback is not None:
            callback(x, k)
        if rel <= tol:
            rep.converged = True
            break
        z = r.copy() if M is None else M(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    rep.solve_seconds = time.perf_counter() - t0
    return x, rep


def fcg_solve(A: CsrMatrix, b, prec=None, tol=1e-3, max_iters=1000, x0=None,
              window=1, callback=None):
    """Flexible CG: each new direction is A-orthogonalised against the last
    ``window`` directions, which keeps it valid for preconditioners that vary
    between iterations. ``prec`` is a callable ``r -> z`` (identity if None).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if window < 1:
        raise ValueError("window must be >= 1")
    t0 = time.perf_counter()
    b, x, r = _start(A, b, x0)
    rep = SolveReport(config={"method": "fcg", "window": window, "tol": tol,
                              "max_iters": max_iters})
    r0 = np.linalg.norm(r)
    rep.residual_history.append(1.0)
    if r0 == 0.0:
        rep.converged = True
        rep.solve_seconds = time.perf_counter() - t0
        return x, rep
    prev = deque(maxlen=window)
    p = r.copy() if prec is None else np.asarray(prec(r), dtype=np.float64)
    for k in range(1, max_iters + 1):
        q = spmv(A, p)
        pq = p @ q
        if not pq > 0:
            raise NotSPDError(f"FCG breakdown at iteration {k}: p^T A p = {pq:.3e}")
        alpha = (p @ r) / pq
        x += alpha * p
        r -= alpha * q
        if k % TRUE_RESIDUAL_EVERY == 0:
            r = b - spmv(A, x)
        rel = np.linalg.norm(r) / r0
        rep.residual_history.append(float(rel))
        rep.iterations = k
        if callback is not None:
            callback(x, k)
        if rel <= tol:
            rep.converged = True
            break
        prev.append((p, q, pq))
        z = r.copy() if prec is None else np.asarray(prec(r), dtype=np.float64)
        p = z.copy()
        for pj, qj, pqj in prev:
            p -= ((z @ qj) / pqj) * pj
    rep.solve_seconds = time.perf_counter() - t0
    return x, rep
