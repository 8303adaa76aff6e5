"""Finite-difference Poisson test problems (Dirichlet boundary, unit spacing)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sparse import CsrMatrix

MAX_ROWS = 50_000_000


@dataclass(frozen=True, eq=False)
class ElementSet:
    """Elements sharing a node count ``k``: ``nodes`` is (m, k), ``local`` (m, k, k)."""

    nodes: np.ndarray
    local: np.ndarray


def _check(dim, n):
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if n < 2:
        raise ValueError("n_per_side must be >= 2")
    if n ** dim > MAX_ROWS:
        raise OverflowError(f"{n}^{dim} rows exceeds the {MAX_ROWS} row guard")


def exact_solution(dim, n) -> np.ndarray:
    """Smooth reference field ``prod_d 4 t(1-t)(1+t)`` on the interior grid.

    Deliberately not a sine product: those are eigenvectors of the discrete
    Laplacian and make every Krylov method converge in one step.
    """
    t = np.arange(1, n + 1) / (n + 1)
    s = 4 * t * (1 - t) * (1 + t)
    x = s
    for _ in range(dim - 1):
        x = np.kron(x, s)
    return x


def gen_poisson(dim: int, n_per_side: int):
    """3/5/7-point Laplacian on an ``n^dim`` grid and ``rhs = A x*``."""
    _check(dim, n_per_side)
    n = n_per_side
    T = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    I = sp.identity(n)
    if dim == 1:
        L = T
    elif dim == 2:
        L = sp.kron(T, I) + sp.kron(I, T)
    else:
        L = sp.kron(sp.kron(T, I), I) + sp.kron(sp.kron(I, T), I) + sp.kron(sp.kron(I, I), T)
    A = CsrMatrix.from_scipy(L.tocsr(), symmetric_hint=True)
    return A, A @ exact_solution(dim, n)


def grid_coords(dim, n) -> np.ndarray:
    """(N, dim) integer coordinates; the last axis varies fastest."""
    axes = np.meshgrid(*([np.arange(n)] * dim), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def poisson_elements(dim: int, n_per_side: int) -> list[ElementSet]:
    """Element-wise pieces that sum to :func:`gen_poisson`'s matrix.

    One two-node element ``[[1, -1], [-1, 1]]`` per grid edge, and one
    single-node element ``[[1]]`` per missing neighbour at the boundary.
    """
    _check(dim, n_per_side)
    n = n_per_side
    idx = np.arange(n ** dim).reshape((n,) * dim)
    edges = []
    bnd = []
    for ax in range(dim):
        lo = np.take(idx, np.arange(n - 1), axis=ax).ravel()
        hi = np.take(idx, np.arange(1, n), axis=ax).ravel()
        edges.append(np.stack([lo, hi], axis=1))
        bnd.append(np.take(idx, 0, axis=ax).ravel())
        bnd.append(np.take(idx, n - 1, axis=ax).ravel())
    e = np.concatenate(edges)
    order = np.lexsort((e[:, 1], e[:, 0]))
    e = e[order]
    b = np.sort(np.concatenate(bnd))
    k2 = np.broadcast_to(np.array([[1.0, -1.0], [-1.0, 1.0]]), (e.shape[0], 2, 2))
    k1 = np.ones((b.size, 1, 1))
    return [ElementSet(e, np.ascontiguousarray(k2)), ElementSet(b[:, None], k1)]


def smooth_perturbation(dim, n, rng, bumps=3, width=0.15) -> np.ndarray:
    """Sum of a few random Gaussian bumps on the unit cube, unit max-norm."""
    X = (grid_coords(dim, n) + 1) / (n + 1)
    field = np.zeros(X.shape[0])
    for _ in range(bumps):
        c = rng.uniform(0.2, 0.8, size=dim)
        d2 = ((X - c) ** 2).sum(axis=1)
        field += rng.standard_normal() * np.exp(-d2 / (2 * width ** 2))
    m = np.abs(field).max()
    return field / m if m > 0 else field
