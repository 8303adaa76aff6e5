"""Compressed sparse row matrices and the handful of kernels built on them.

Every matrix in the package (fine operators, prolongators, coarse operators)
is a :class:`CsrMatrix`. Arithmetic kernels are delegated to ``scipy.sparse``,
whose CSR loops accumulate each entry in stored-column order, so results are
reproducible run to run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CsrMatrix",
    "NotSPDError",
    "identity",
    "spmv",
    "transpose",
    "spgemm",
    "norm2",
    "norm_inf",
    "norm_A",
    "norms",
]


class NotSPDError(ValueError):
    """Raised when an operation needs a symmetric positive definite matrix."""


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    if a.flags.writeable:
        a = a.copy()
        a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Immutable CSR matrix in canonical form.

    Rows hold strictly increasing column indices and no duplicates. The
    constructor checks this; use :meth:`from_coo` to build from unsorted
    triplets.
    """

    nrows: int
    ncols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray
    symmetric_hint: bool = False
    _sp: sp.csr_matrix = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ro = _frozen(self.row_offsets, np.int64)
        ci = _frozen(self.col_indices, np.int64)
        va = _frozen(self.values, np.float64)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)
        object.__setattr__(self, "nrows", int(self.nrows))
        object.__setattr__(self, "ncols", int(self.ncols))
        self.check_canonical()

    # -- construction -----------------------------------------------------
    @classmethod
    def from_scipy(cls, M, symmetric_hint=False) -> "CsrMatrix":
        M = sp.csr_matrix(M, dtype=np.float64)
        M.sum_duplicates()  # also sorts indices
        return cls(M.shape[0], M.shape[1], M.indptr, M.indices, M.data,
                   symmetric_hint)

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals, symmetric_hint=False):
        """Build from triplets; duplicates are summed in input order."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= nrows
                          or cols.min() < 0 or cols.max() >= ncols):
            raise IndexError("triplet index out of range")
        order = np.lexsort((cols, rows))  # stable: keeps input order of dups
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new = np.empty(rows.size, dtype=bool)
            new[0] = True
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            lengths = np.diff(np.append(starts, rows.size))
            summed = np.zeros(starts.size)
            # sequential accumulation per entry, in input order
            for k in range(int(lengths.max())):
                ok = lengths > k
                summed[ok] += vals[starts[ok] + k]
            rows, cols, vals = rows[starts], cols[starts], summed
        offsets = np.zeros(nrows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(nrows, ncols, offsets, cols, vals, symmetric_hint)

    @classmethod
    def from_dense(cls, D, symmetric_hint=False) -> "CsrMatrix":
        D = np.atleast_2d(np.asarray(D, dtype=np.float64))
        r, c = np.nonzero(D)
        return cls.from_coo(D.shape[0], D.shape[1], r, c, D[r, c],
                            symmetric_hint)

    # -- views ------------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.row_offsets[-1])

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry (COO expansion)."""
        return np.repeat(np.arange(self.nrows, dtype=np.int64),
                         np.diff(self.row_offsets))

    def scipy(self) -> sp.csr_matrix:
        """Read-only scipy view sharing this matrix's arrays."""
        if self._sp is None:
            M = sp.csr_matrix((self.values, self.col_indices, self.row_offsets),
                              shape=self.shape, copy=False)
            M.has_sorted_indices = True
            M.has_canonical_format = True
            object.__setattr__(self, "_sp", M)
        return self._sp

    def to_dense(self) -> np.ndarray:
        return self.scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.scipy().diagonal()

    def check_canonical(self):
        ro, ci = self.row_offsets, self.col_indices
        if ro.shape != (self.nrows + 1,) or ro[0] != 0:
            raise ValueError("row_offsets must have length nrows+1 and start at 0")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if ro[-1] != ci.size or ci.size != self.values.size:
            raise ValueError("row_offsets[-1], len(col_indices), len(values) differ")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.ncols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row
            inc = np.diff(ci) > 0
            row_start = np.zeros(ci.size, dtype=bool)
            row_start[ro[:-1][ro[:-1] < ci.size]] = True
            if not np.all(inc | row_start[1:]):
                raise ValueError("columns not strictly increasing within a row")

    def is_symmetric(self, rtol=1e-12) -> bool:
        if self.nrows != self.ncols:
            return False
        S = self.scipy()
        diff = abs(S - S.T)
        scale = max(abs(self.values).max(initial=0.0), np.finfo(float).tiny)
        return diff.nnz == 0 or diff.max() <= rtol * scale

    def max_abs(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def __matmul__(self, other):
        if isinstance(other, CsrMatrix):
            return spgemm(self, other)
        return spmv(self, other)


def identity(n: int) -> CsrMatrix:
    idx = np.arange(n, dtype=np.int64)
    return CsrMatrix(n, n, np.arange(n + 1), idx, np.ones(n), True)


def spmv(A: CsrMatrix, x) -> np.ndarray:
    """Return ``A @ x`` as a new vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.ncols:
        raise ValueError(f"dimension mismatch: A is {A.shape}, x has {x.shape}")
    return A.scipy() @ x


def transpose(A: CsrMatrix) -> CsrMatrix:
    T = A.scipy().T.tocsr()
    T.sort_indices()
    return CsrMatrix(A.ncols, A.nrows, T.indptr, T.indices, T.data,
                     A.symmetric_hint)


def spgemm(A: CsrMatrix, B: CsrMatrix) -> CsrMatrix:
    """Sparse product ``A @ B``.

    Entries that cancel to exactly zero are not stored; nothing else is
    dropped.
    """
    if A.ncols != B.nrows:
        raise ValueError(f"dimension mismatch: {A.shape} @ {B.shape}")
    C = (A.scipy() @ B.scipy()).tocsr()
    C.sort_indices()
    return CsrMatrix(A.nrows, B.ncols, C.indptr, C.indices, C.data)


def norm2(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def norm_inf(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.abs(x).max(initial=0.0))


def norm_A(x, A: CsrMatrix, rtol=1e-12) -> float:
    """Energy norm ``sqrt(x^T A x)``.

    Raises :class:`NotSPDError` when the quadratic form is negative beyond
    rounding (relative to ``|x|^T |A| |x|``).
    """
    x = np.asarray(x, dtype=np.float64)
    q = float(x @ spmv(A, x))
    if q < 0:
        scale = float(np.abs(x) @ (abs(A.scipy()) @ np.abs(x)))
        if q < -rtol * scale:
            raise NotSPDError(f"x^T A x = {q:.3e} < 0: matrix is not SPD")
        q = 0.0
    return float(np.sqrt(q))


def norms(x, A: CsrMatrix | None = None) -> dict:
    """Euclidean, max and (if ``A`` is given) energy norm of ``x``."""
    out = {"l2": norm2(x), "inf": norm_inf(x)}
    if A is not None:
        out["A"] = norm_A(x, A)
    return out
