"""Multilevel hierarchy: tentative/smoothed prolongators and Galerkin operators."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import CoarsestSolverSpec, PreconditionerConfig
from .matching import (AggregationMap, Matching, build_edge_weights,
                       decoupled_smoothed_aggregation, half_approx_matching,
                       local_blocks, matching_to_aggregates)
from .smoothers import SmootherSpec
from .sparse import CsrMatrix, NotSPDError, spgemm, transpose

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Prolongator:
    P: CsrMatrix
    kind: str                        # tentative | smoothed
    coarse_w: np.ndarray | None = None
    aggregates: AggregationMap | None = None

    @property
    def shape(self):
        return self.P.shape


def _as_aggregates(agg, n) -> AggregationMap:
    if isinstance(agg, Matching):
        return matching_to_aggregates(agg, n)
    return agg


def build_tentative_prolongator(agg, w) -> Prolongator:
    """Piecewise-constant prolongator whose range contains ``w``.

    ``agg`` is a :class:`Matching` or an :class:`AggregationMap`. Column ``p``
    holds ``w`` restricted to aggregate ``p`` and scaled to unit length, so a
    singleton column is ``sign(w_s)``. ``coarse_w`` holds the aggregate norms
    ``c`` with ``P c = w``.
    """
    w = np.asarray(w, dtype=np.float64)
    amap = _as_aggregates(agg, w.size)
    if amap.n_fine != w.size:
        raise ValueError("aggregation and w differ in length")
    c = np.sqrt(np.bincount(amap.assign, weights=w * w, minlength=amap.n_coarse))
    if np.any(c == 0):
        p = int(np.flatnonzero(c == 0)[0])
        members = np.flatnonzero(amap.assign == p).tolist()
        raise ZeroDivisionError(f"w vanishes on aggregate {p} (rows {members})")
    n = w.size
    P = CsrMatrix(n, amap.n_coarse, np.arange(n + 1), amap.assign,
                  w / c[amap.assign])
    return Prolongator(P, "tentative", c, amap)


def smoothing_weight(A: CsrMatrix) -> float:
    """``1 / ||D^{-1} A||_inf``."""
    d = A.diagonal()
    if np.any(d == 0):
        raise ZeroDivisionError(f"zero diagonal entry in row {int(np.flatnonzero(d == 0)[0])}")
    rowsum = np.asarray(abs(A.scipy()).sum(axis=1)).ravel()
    return float(1.0 / np.max(rowsum / np.abs(d)))


def smooth_prolongator(A: CsrMatrix, P_hat: Prolongator) -> Prolongator:
    """``P = (I - omega D^{-1} A) P_hat`` with ``omega = 1/||D^{-1} A||_inf``."""
    omega = smoothing_weight(A)
    Dinv = sp.diags(1.0 / A.diagonal())
    Ph = P_hat.P.scipy()
    P = (Ph - omega * (Dinv @ (A.scipy() @ Ph))).tocsr()
    P.eliminate_zeros()
    P.sort_indices()
    if P.nnz == 0:
        raise ValueError("smoothed prolongator is identically zero "
                         "(D^{-1} A = I: the matrix is diagonal, AMG is pointless)")
    return Prolongator(CsrMatrix(P.shape[0], P.shape[1], P.indptr, P.indices, P.data),
                       "smoothed", P_hat.coarse_w, P_hat.aggregates)


def galerkin(A: CsrMatrix, P: CsrMatrix) -> CsrMatrix:
    """Coarse operator ``P^T A P``."""
    return spgemm(transpose(P), spgemm(A, P))


@dataclass(frozen=True, eq=False)
class Composition:
    prolongator: Prolongator
    coarse_w: np.ndarray
    rounds: int
    stalled: bool


def compose_pairwise(A: CsrMatrix, w, sweeps: int) -> Composition:
    """Chain ``sweeps`` pairwise matching rounds into one tentative prolongator.

    Each round matches on the current working matrix, builds its tentative
    prolongator and coarsens the working matrix with it. A round that matches
    nothing ends the chain early with ``stalled=True``.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    w = np.asarray(w, dtype=np.float64)
    Ak, wk = A, w
    composed = None
    labels = np.arange(w.size)
    rounds = 0
    stalled = False
    for k in range(sweeps):
        m = half_approx_matching(build_edge_weights(Ak, wk))
        if not m.pairs:
            stalled = True
            break
        Pk = build_tentative_prolongator(m, wk)
        composed = Pk.P if composed is None else spgemm(composed, Pk.P)
        labels = Pk.aggregates.assign[labels]
        rounds += 1
        wk = Pk.coarse_w
        if k < sweeps - 1:
            Ak = galerkin(Ak, Pk.P)
    if composed is None:
        P = build_tentative_prolongator(
            AggregationMap(w.size, w.size, np.arange(w.size), None), w)
        return Composition(P, P.coarse_w, 0, True)
    amap = AggregationMap(w.size, composed.ncols, labels, None, 2 ** sweeps)
    return Composition(Prolongator(composed, "tentative", wk, amap), wk, rounds, stalled)


@dataclass(frozen=True, eq=False)
class Level:
    A: CsrMatrix
    P: Prolongator
    smoother: SmootherSpec
    owner: np.ndarray
    w: np.ndarray
    diag: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True, eq=False)
class AmgHierarchy:
    levels: list
    coarsest_A: CsrMatrix
    coarsest_owner: np.ndarray
    coarsest: CoarsestSolverSpec
    config: PreconditionerConfig
    n_ranks: int
    stalled: bool = False

    @property
    def n_levels(self) -> int:
        return len(self.levels) + 1

    def operators(self) -> list[CsrMatrix]:
        return [lv.A for lv in self.levels] + [self.coarsest_A]

    def operator_complexity(self) -> float:
        ops = self.operators()
        return sum(a.nnz for a in ops) / ops[0].nnz

    def summary(self) -> dict:
        ops = self.operators()
        levels = []
        for l, A in enumerate(ops):
            entry = {"level": l, "size": A.nrows, "nnz": A.nnz}
            if l < len(self.levels):
                sizes = self.levels[l].P.aggregates.aggregate_sizes
                hist = np.bincount(sizes)
                entry["aggregate_size_histogram"] = {
                    str(s): int(c) for s, c in enumerate(hist) if c}
            levels.append(entry)
        return {
            "preconditioner": self.config.label,
            "n_levels": self.n_levels,
            "n_ranks": self.n_ranks,
            "operator_complexity": self.operator_complexity(),
            "stalled": self.stalled,
            "levels": levels,
        }


def check_spd_input(A: CsrMatrix, rtol=1e-12):
    if A.nrows != A.ncols:
        raise NotSPDError("matrix is not square")
    d = A.diagonal()
    if np.any(d <= 0):
        raise NotSPDError(f"non-positive diagonal at row {int(np.flatnonzero(d <= 0)[0])}")
    if not A.is_symmetric(rtol):
        raise NotSPDError("matrix is not symmetric")


def _coarse_owner(owner, amap: AggregationMap):
    out = np.full(amap.n_coarse, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(out, amap.assign, owner)
    return out


def build_hierarchy(A: CsrMatrix, config: PreconditionerConfig, owner=None,
                    w=None) -> AmgHierarchy:
    """Build levels until the coarse size is small enough or ``max_levels`` is hit.

    ``owner`` maps rows of ``A`` to ranks (one rank when omitted) and decides
    the smoother blocks, the decoupled aggregation blocks and the coarsest
    threshold ``coarse_size_per_rank * n_ranks``. Coarse rows are owned by the
    lowest rank among their aggregate's members.
    """
    if not config.is_amg:
        raise ValueError(f"{config.label} is not a multilevel preconditioner")
    check_spd_input(A)
    owner = np.zeros(A.nrows, dtype=np.int64) if owner is None \
        else np.asarray(owner, dtype=np.int64)
    n_ranks = int(np.unique(owner).size)
    threshold = config.coarse_threshold(n_ranks)
    w = np.ones(A.nrows) if w is None else np.asarray(w, dtype=np.float64)

    levels = []
    Al, owner_l, w_l = A, owner, w
    stalled = False
    while Al.nrows > threshold and len(levels) < config.max_levels - 1:
        l = len(levels)
        if config.label == "MLVSBM":
            theta = config.theta * 0.5 ** l
            amap = decoupled_smoothed_aggregation(local_blocks(Al, owner_l), theta, Al.nrows)
            P_hat = build_tentative_prolongator(amap, w_l)
        else:
            comp = compose_pairwise(Al, w_l, config.matching_sweeps)
            P_hat = comp.prolongator
        if P_hat.P.ncols >= Al.nrows:
            log.warning("coarsening stalled at level %d (n=%d)", l, Al.nrows)
            stalled = True
            break
        P = smooth_prolongator(Al, P_hat)
        levels.append(Level(Al, P, config.smoother, owner_l, w_l, Al.diagonal()))
        owner_l = _coarse_owner(owner_l, P_hat.aggregates)
        w_l = P_hat.coarse_w
        Al = galerkin(Al, P.P)
        log.debug("level %d: %d -> %d rows", l, P.P.nrows, P.P.ncols)
    return AmgHierarchy(levels, Al, owner_l, config.coarsest, config, n_ranks, stalled)
