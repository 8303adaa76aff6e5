"""Hybrid Gauss-Seidel smoothers and the ILU(1) block factorization.

The hybrid smoother is damped block-Jacobi over the row blocks of a rank
partition, each block solved by a forward (or backward) Gauss-Seidel sweep.
Blocks are identified by an ``owner`` array (row -> rank); within a block the
natural ordering of global indices is used, so "lower" means ``j < i`` and
same owner.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .sparse import CsrMatrix

_jit = dict(nogil=True, cache=True)


@dataclass(frozen=True)
class SmootherSpec:
    kind: str = "hybrid_fgs"  # hybrid_fgs | hybrid_bgs | jacobi
    sweeps: int = 4
    omega: float = 1.0

    def __post_init__(self):
        if self.kind not in ("hybrid_fgs", "hybrid_bgs", "jacobi"):
            raise ValueError(f"unknown smoother kind {self.kind!r}")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@nb.njit(**_jit)
def _residual(ro, ci, va, x, b, out):
    for i in range(ro.size - 1):
        s = 0.0
        for k in range(ro[i], ro[i + 1]):
            s += va[k] * x[ci[k]]
        out[i] = b[i] - s


@nb.njit(**_jit)
def _gs_sweep(ro, ci, va, diag, owner, x, b, omega, forward, res, d):
    n = ro.size - 1
    _residual(ro, ci, va, x, b, res)
    if forward:
        for i in range(n):
            s = res[i] / omega
            oi = owner[i]
            for k in range(ro[i], ro[i + 1]):
                j = ci[k]
                if j >= i:
                    break
                if owner[j] == oi:
                    s -= va[k] * d[j]
            d[i] = s / diag[i]
    else:
        for i in range(n - 1, -1, -1):
            s = res[i] / omega
            oi = owner[i]
            for k in range(ro[i + 1] - 1, ro[i] - 1, -1):
                j = ci[k]
                if j <= i:
                    break
                if owner[j] == oi:
                    s -= va[k] * d[j]
            d[i] = s / diag[i]
    for i in range(n):
        x[i] += d[i]


def _check_diag(diag):
    bad = np.flatnonzero(diag == 0)
    if bad.size:
        raise ZeroDivisionError(f"zero diagonal entry in row {int(bad[0])}")


def hybrid_gs_apply(A: CsrMatrix, owner, spec: SmootherSpec, r,
                    direction="forward", x0=None, diag=None) -> np.ndarray:
    """Run ``spec.sweeps`` iterations of ``x <- x + M^{-1}(r - A x)``.

    ``M = blockdiag(omega (L_pp + D_pp))`` for ``direction="forward"`` and its
    transpose for ``"backward"``; blocks are the row sets sharing an ``owner``
    value. Starting guess is ``x0`` (zero by default). With a single block
    this is plain damped Gauss-Seidel.

    ``spec.kind == "jacobi"`` ignores ``direction`` and uses ``M = omega D``.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (A.nrows,):
        raise ValueError(f"dimension mismatch: A is {A.shape}, r has {r.shape}")
    owner = np.asarray(owner, dtype=np.int64)
    if owner.shape != (A.nrows,):
        raise ValueError("owner array does not cover the rows of A")
    if diag is None:
        diag = A.diagonal()
        _check_diag(diag)
    x = np.zeros(A.nrows) if x0 is None else np.array(x0, dtype=np.float64)
    if spec.kind == "jacobi":
        for _ in range(spec.sweeps):
            x += (r - A.scipy() @ x) / (spec.omega * diag)
        return x
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be forward or backward, got {direction!r}")
    res = np.empty(A.nrows)
    d = np.empty(A.nrows)
    fwd = direction == "forward"
    for _ in range(spec.sweeps):
        _gs_sweep(A.row_offsets, A.col_indices, A.values, diag, owner, x, r,
                  float(spec.omega), fwd, res, d)
    return x


# -- ILU(1) -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Ilu1Factor:
    """``A ~ L U`` with unit lower ``L`` and upper ``U`` on the level-1 pattern."""

    L: CsrMatrix
    U: CsrMatrix

    def solve(self, r) -> np.ndarray:
        y = np.array(r, dtype=np.float64)
        _lower_unit_solve(self.L.row_offsets, self.L.col_indices, self.L.values, y)
        _upper_solve(self.U.row_offsets, self.U.col_indices, self.U.values, y)
        return y


@nb.njit(**_jit)
def _lower_unit_solve(ro, ci, va, y):
    for i in range(ro.size - 1):
        s = y[i]
        for k in range(ro[i], ro[i + 1]):
            j = ci[k]
            if j < i:
                s -= va[k] * y[j]
        y[i] = s


@nb.njit(**_jit)
def _upper_solve(ro, ci, va, y):
    for i in range(ro.size - 2, -1, -1):
        s = y[i]
        piv = 0.0
        for k in range(ro[i], ro[i + 1]):
            j = ci[k]
            if j > i:
                s -= va[k] * y[j]
            elif j == i:
                piv = va[k]
        y[i] = s / piv


def ilu_fill_pattern(A: CsrMatrix, level: int = 1) -> list[dict[int, int]]:
    """Symbolic level-of-fill pattern: per row, ``{col: level}`` with level <= ``level``.

    ``lev(i,j) = 0`` on the pattern of ``A`` (diagonal always included) and a
    fill entry created through pivot ``k`` gets ``lev(i,k) + lev(k,j) + 1``,
    keeping the minimum over all ``k``.
    """
    n = A.nrows
    rows = []
    ro, ci = A.row_offsets, A.col_indices
    for i in range(n):
        lev = {int(j): 0 for j in ci[ro[i]:ro[i + 1]]}
        lev.setdefault(i, 0)
        k_done = set()
        while True:
            ks = [k for k in lev if k < i and k not in k_done]
            if not ks:
                break
            k = min(ks)
            k_done.add(k)
            lik = lev[k]
            for j, lkj in rows[k].items():
                if j <= k:
                    continue
                new = lik + lkj + 1
                if new <= level and new < lev.get(j, level + 1):
                    lev[j] = new
        rows.append(dict(sorted(lev.items())))
    return rows


def ilu1_factor(A_block: CsrMatrix) -> Ilu1Factor:
    """ILU(1) of a square block by IKJ elimination on the level-1 pattern.

    No pivoting; a zero pivot raises :class:`ZeroDivisionError` naming the row.
    """
    if A_block.nrows != A_block.ncols:
        raise ValueError("ILU needs a square block")
    n = A_block.nrows
    pattern = ilu_fill_pattern(A_block, 1)
    D = A_block.scipy()
    rows_vals = []
    for i in range(n):
        w = {j: 0.0 for j in pattern[i]}
        lo, hi = D.indptr[i], D.indptr[i + 1]
        for j, v in zip(D.indices[lo:hi], D.data[lo:hi]):
            w[int(j)] = float(v)
        for k in sorted(j for j in w if j < i):
            piv = rows_vals[k][k]
            if piv == 0.0:
                raise ZeroDivisionError(f"zero pivot in row {k}")
            w[k] /= piv
            lik = w[k]
            if lik == 0.0:
                continue
            for j, ukj in rows_vals[k].items():
                if j > k and j in w:
                    w[j] -= lik * ukj
        if w[i] == 0.0:
            raise ZeroDivisionError(f"zero pivot in row {i}")
        rows_vals.append(w)
    Lr, Lc, Lv, Ur, Uc, Uv = [], [], [], [], [], []
    for i, w in enumerate(rows_vals):
        for j, v in w.items():
            if j < i:
                Lr.append(i); Lc.append(j); Lv.append(v)
            else:
                Ur.append(i); Uc.append(j); Uv.append(v)
        Lr.append(i); Lc.append(i); Lv.append(1.0)
    L = CsrMatrix.from_coo(n, n, Lr, Lc, Lv)
    U = CsrMatrix.from_coo(n, n, Ur, Uc, Uv)
    return Ilu1Factor(L, U)


class BlockJacobiILU1:
    """Block-Jacobi preconditioner with one ILU(1) factor per owner block."""

    def __init__(self, A: CsrMatrix, owner):
        owner = np.asarray(owner, dtype=np.int64)
        S = A.scipy()
        self.blocks = []
        for p in np.unique(owner):
            idx = np.flatnonzero(owner == p)
            blk = CsrMatrix.from_scipy(S[idx][:, idx])
            self.blocks.append((idx, ilu1_factor(blk)))

    def __call__(self, r) -> np.ndarray:
        z = np.empty_like(np.asarray(r, dtype=np.float64))
        for idx, f in self.blocks:
            z[idx] = f.solve(r[idx])
        return z
