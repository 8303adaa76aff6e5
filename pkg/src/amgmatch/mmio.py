"""MatrixMarket coordinate I/O (real; general or symmetric)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .sparse import CsrMatrix


class MatrixMarketError(ValueError):
    pass


def read_mm(path) -> CsrMatrix:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket"):
        raise MatrixMarketError(f"{path}: missing %%MatrixMarket banner")
    banner = lines[0].lower().split()
    if len(banner) != 5 or banner[1:3] != ["matrix", "coordinate"] \
            or banner[3] not in ("real", "integer"):
        raise MatrixMarketError(f"{path}: unsupported header {lines[0]!r}")
    symmetry = banner[4]
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"{path}: unsupported symmetry {symmetry!r}")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    try:
        nrows, ncols, nnz = (int(t) for t in body[0].split())
        data = np.array([ln.split() for ln in body[1:1 + nnz]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise MatrixMarketError(f"{path}: malformed body: {exc}") from None
    data = data.reshape(-1, 3)
    if data.shape[0] != nnz:
        raise MatrixMarketError(f"{path}: expected {nnz} entries, got {data.shape[0]}")
    r = data[:, 0].astype(np.int64) - 1
    c = data[:, 1].astype(np.int64) - 1
    v = data[:, 2]
    if symmetry == "symmetric":
        if np.any(c > r):
            raise MatrixMarketError(f"{path}: symmetric file has upper-triangle entries")
        off = r != c
        r, c, v = (np.concatenate([r, c[off]]), np.concatenate([c, r[off]]),
                   np.concatenate([v, v[off]]))
    try:
        return CsrMatrix.from_coo(nrows, ncols, r, c, v,
                                  symmetric_hint=symmetry == "symmetric")
    except IndexError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from None


def write_mm(path, A: CsrMatrix, symmetric=False, comment=None):
    """Write ``A``; values use 17 significant digits so they round-trip."""
    rows = A.row_indices()
    cols = A.col_indices
    vals = A.values
    if symmetric:
        if not A.is_symmetric(rtol=0.0):
            raise ValueError("matrix is not exactly symmetric")
        keep = cols <= rows
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real "
                 f"{'symmetric' if symmetric else 'general'}\n")
        if comment:
            for ln in comment.splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{A.nrows} {A.ncols} {rows.size}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
