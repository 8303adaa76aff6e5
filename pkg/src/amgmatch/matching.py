"""Coarse aggregates from weighted matching, plus decoupled classic aggregation.

Pairwise aggregates come from a half-approximate maximum product matching on
the adjacency graph of ``A``. Edge weights are

    c_ij = 1 - 2 a_ij w_i w_j / (a_ii w_i^2 + a_jj w_j^2)

and the product objective is turned into a sum by taking ``log c_ij``; only
edges with ``c_ij > 1`` have a positive log-weight and take part.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
import scipy.sparse as sp

from .sparse import CsrMatrix

_jit = dict(nogil=True, cache=True)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with one edge ``(i, j, c_ij)``, ``i < j``, per pair."""

    n_vertices: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    weight: np.ndarray
    n_excluded: int = 0

    @classmethod
    def from_edges(cls, n, edges):
        edges = list(edges)
        if not edges:
            z = np.zeros(0, dtype=np.int64)
            return cls(n, z, z.copy(), np.zeros(0))
        i, j, c = (np.array(t) for t in zip(*edges))
        lo, hi = np.minimum(i, j).astype(np.int64), np.maximum(i, j).astype(np.int64)
        if np.any(lo == hi):
            raise ValueError("self-loops are not allowed")
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edge")
        order = np.argsort(keys, kind="stable")
        return cls(n, lo[order], hi[order], np.asarray(c, dtype=float)[order])

    @property
    def n_edges(self) -> int:
        return int(self.edge_i.size)


@dataclass(frozen=True)
class Matching:
    pairs: tuple      # ((i, j), ...) with i < j, sorted
    singletons: tuple

    @property
    def n_coarse(self) -> int:
        return len(self.pairs) + len(self.singletons)

    def validate(self, n=None):
        seen = [v for p in self.pairs for v in p] + list(self.singletons)
        if len(seen) != len(set(seen)):
            raise AssertionError("vertex appears twice in matching")
        if n is not None and sorted(seen) != list(range(n)):
            raise AssertionError("matching does not cover every vertex exactly once")


@dataclass(frozen=True, eq=False)
class AggregationMap:
    n_fine: int
    n_coarse: int
    assign: np.ndarray          # fine index -> aggregate id
    aggregate_sizes: np.ndarray
    max_size: int | None = None

    def __post_init__(self):
        a = np.asarray(self.assign, dtype=np.int64)
        object.__setattr__(self, "assign", a)
        if a.shape != (self.n_fine,) or (a.size and (a.min() < 0 or a.max() >= self.n_coarse)):
            raise ValueError("assign must map every fine index to 0..n_coarse-1")
        sizes = np.bincount(a, minlength=self.n_coarse)
        if np.any(sizes == 0):
            raise ValueError("empty aggregate")
        object.__setattr__(self, "aggregate_sizes", sizes)
        if self.max_size is not None and sizes.max(initial=0) > self.max_size:
            raise ValueError(f"aggregate larger than bound {self.max_size}")

    @classmethod
    def from_labels(cls, labels, max_size=None):
        """Renumber arbitrary labels so aggregates are ordered by smallest member."""
        labels = np.asarray(labels, dtype=np.int64)
        n = labels.size
        _, first = np.unique(labels, return_index=True)
        first.sort()
        remap = np.empty(labels.max() + 1 if n else 0, dtype=np.int64)
        remap[labels[first]] = np.arange(first.size)
        return cls(n, int(first.size), remap[labels], None, max_size)

    def members(self) -> list[np.ndarray]:
        order = np.argsort(self.assign, kind="stable")
        return np.split(order, np.cumsum(self.aggregate_sizes)[:-1])


# -- edge weights --------------------------------------------------------------

def _symmetrized(A: CsrMatrix) -> sp.csr_matrix:
    S = A.scipy()
    pat = S.copy()
    pat.data = np.ones_like(pat.data)
    if (pat != pat.T).nnz == 0:
        return S
    # pattern union, values averaged
    return ((S + S.T) * 0.5).tocsr()


def build_edge_weights(A: CsrMatrix, w) -> WeightedGraph:
    """Edge weight graph of ``A`` for test vector ``w``.

    Edges whose weight is not finite are dropped and counted in
    ``n_excluded``. A vanishing denominator is an error.
    """
    if A.nrows != A.ncols:
        raise ValueError("A must be square")
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (A.nrows,):
        raise ValueError("w length does not match A")
    S = _symmetrized(A)
    diag = S.diagonal()
    if np.any(diag <= 0):
        raise ValueError(f"non-positive diagonal at row {int(np.flatnonzero(diag <= 0)[0])}")
    C = sp.triu(S, k=1).tocoo()
    i = C.row.astype(np.int64)
    j = C.col.astype(np.int64)
    a = C.data
    denom = diag[i] * w[i] ** 2 + diag[j] * w[j] ** 2
    if np.any(denom == 0):
        k = int(np.flatnonzero(denom == 0)[0])
        raise ZeroDivisionError(
            f"edge ({i[k]}, {j[k]}): a_ii w_i^2 + a_jj w_j^2 == 0")
    c = 1.0 - 2.0 * a * w[i] * w[j] / denom
    ok = np.isfinite(c)
    order = np.lexsort((j[ok], i[ok]))
    return WeightedGraph(A.nrows, i[ok][order], j[ok][order], c[ok][order],
                         int((~ok).sum()))


# -- matching ------------------------------------------------------------------

@nb.njit(**_jit)
def _better(w1, a1, b1, w2, a2, b2):
    # heavier first; equal weights: smaller (min, max) key first
    if w1 != w2:
        return w1 > w2
    if a1 != a2:
        return a1 < a2
    return b1 < b2


@nb.njit(**_jit)
def _best_free(v, indptr, nbr, wt, mate):
    best = -1
    bw = 0.0
    for k in range(indptr[v], indptr[v + 1]):
        u = nbr[k]
        if mate[u] != -1:
            continue
        a, b = (u, v) if u < v else (v, u)
        if best == -1:
            best, bw = u, wt[k]
        else:
            ba, bb = (best, v) if best < v else (v, best)
            if _better(wt[k], a, b, bw, ba, bb):
                best, bw = u, wt[k]
    return best


@nb.njit(**_jit)
def _locally_dominant(n, indptr, nbr, wt):
    mate = np.full(n, -1, dtype=np.int64)
    cand = np.empty(n, dtype=np.int64)
    for v in range(n):
        cand[v] = _best_free(v, indptr, nbr, wt, mate)
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for v in range(n):
        u = cand[v]
        if u != -1 and mate[v] == -1 and cand[u] == v:
            mate[v] = u
            mate[u] = v
            queue[tail] = v
            queue[tail + 1] = u
            tail += 2
    while head < tail:
        u = queue[head]
        head += 1
        for k in range(indptr[u], indptr[u + 1]):
            x = nbr[k]
            if mate[x] != -1 or cand[x] != u:
                continue
            y = _best_free(x, indptr, nbr, wt, mate)
            cand[x] = y
            if y != -1 and cand[y] == x:
                mate[x] = y
                mate[y] = x
                queue[tail] = x
                queue[tail + 1] = y
                tail += 2
    return mate


def log_weight_adjacency(G: WeightedGraph):
    """CSR adjacency over eligible edges (``c > 1``) with weights ``log c``."""
    keep = G.weight > 1.0
    i, j = G.edge_i[keep], G.edge_j[keep]
    lw = np.log(G.weight[keep])
    M = sp.csr_matrix((np.concatenate([lw, lw]),
                       (np.concatenate([i, j]), np.concatenate([j, i]))),
                      shape=(G.n_vertices, G.n_vertices))
    M.sort_indices()
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data


def half_approx_matching(G: WeightedGraph) -> Matching:
    """Locally-dominant edge matching on log-transformed weights.

    The matched weight is at least half of the maximum; ties are broken
    towards the lexicographically smaller ``(min, max)`` endpoint pair.
    """
    indptr, nbr, wt = log_weight_adjacency(G)
    mate = _locally_dominant(G.n_vertices, indptr, nbr, wt)
    v = np.arange(G.n_vertices)
    lo = v[(mate > v)]
    pairs = tuple((int(a), int(mate[a])) for a in lo)
    singletons = tuple(int(s) for s in v[mate == -1])
    m = Matching(pairs, singletons)
    m.validate(G.n_vertices)
    return m


def matching_weight(G: WeightedGraph, m: Matching) -> float:
    """Sum of ``log c`` over matched edges."""
    lookup = {(int(a), int(b)): c for a, b, c in zip(G.edge_i, G.edge_j, G.weight)}
    return float(sum(np.log(lookup[p]) for p in m.pairs))


def matching_to_aggregates(m: Matching, n=None) -> AggregationMap:
    n = m.n_coarse + len(m.pairs) if n is None else n
    labels = np.full(n, -1, dtype=np.int64)
    for k, (i, j) in enumerate(m.pairs):
        labels[i] = labels[j] = k
    for k, s in enumerate(m.singletons, start=len(m.pairs)):
        labels[s] = k
    if np.any(labels < 0):
        raise ValueError("matching does not cover every vertex")
    return AggregationMap.from_labels(labels, max_size=2)


def matched_graph_dot(G: WeightedGraph, m: Matching, name="matching") -> str:
    """Graphviz rendering with matched edges drawn bold red."""
    matched = set(m.pairs)
    out = [f"graph {name} {{"]
    out += [f"  {v};" for v in range(G.n_vertices)]
    for a, b, c in zip(G.edge_i, G.edge_j, G.weight):
        attrs = "color=red, penwidth=3, " if (int(a), int(b)) in matched else ""
        out.append(f'  {a} -- {b} [{attrs}label="{c:.3g}"];')
    out.append("}")
    return "\n".join(out) + "\n"


# -- decoupled classic smoothed aggregation ------------------------------------

@nb.njit(**_jit)
def _vanek(indptr, nbr, strength):
    n = indptr.size - 1
    agg = np.full(n, -1, dtype=np.int64)
    n_agg = 0
    # pass 1: root points whose whole strong neighbourhood is free
    for i in range(n):
        if agg[i] != -1:
            continue
        free = True
        for k in range(indptr[i], indptr[i + 1]):
            if agg[nbr[k]] != -1:
                free = False
                break
        if free:
            agg[i] = n_agg
            for k in range(indptr[i], indptr[i + 1]):
                agg[nbr[k]] = n_agg
            n_agg += 1
    # pass 2: attach leftovers to the most strongly connected pass-1 aggregate
    snap = agg.copy()
    for i in range(n):
        if snap[i] != -1:
            continue
        best = -1
        bs = -1.0
        for k in range(indptr[i], indptr[i + 1]):
            j = nbr[k]
            if snap[j] != -1 and strength[k] > bs:
                best, bs = j, strength[k]
        if best != -1:
            agg[i] = snap[best]
    # pass 3: whatever is left forms aggregates with its free neighbours
    for i in range(n):
        if agg[i] != -1:
            continue
        agg[i] = n_agg
        for k in range(indptr[i], indptr[i + 1]):
            if agg[nbr[k]] == -1:
                agg[nbr[k]] = n_agg
        n_agg += 1
    return agg


def strength_graph(A: CsrMatrix, theta: float) -> sp.csr_matrix:
    """Strong couplings ``|a_ij| >= theta sqrt(a_ii a_jj)``, ``j != i``; values ``|a_ij|``."""
    S = A.scipy().tocoo()
    d = A.diagonal()
    if np.any(d <= 0):
        raise ValueError("aggregation needs a positive diagonal")
    off = S.row != S.col
    r, c, v = S.row[off], S.col[off], np.abs(S.data[off])
    strong = (v >= theta * np.sqrt(d[r] * d[c])) & (v != 0)
    G = sp.csr_matrix((v[strong], (r[strong], c[strong])), shape=A.shape)
    G.sort_indices()
    return G


def vanek_aggregation(A: CsrMatrix, theta: float) -> np.ndarray:
    """Greedy three-pass aggregation of one block; returns local labels."""
    if not 0.0 <= theta < 1.0:
        raise ValueError("theta must lie in [0, 1)")
    G = strength_graph(A, theta)
    return _vanek(G.indptr.astype(np.int64), G.indices.astype(np.int64), G.data)


def local_blocks(A: CsrMatrix, owner) -> list[tuple[np.ndarray, CsrMatrix]]:
    """Diagonal block ``A[rows, rows]`` for every owner, in ascending rank order."""
    owner = np.asarray(owner)
    S = A.scipy()
    out = []
    for p in np.unique(owner):
        rows = np.flatnonzero(owner == p)
        out.append((rows, CsrMatrix.from_scipy(S[rows][:, rows])))
    return out


def decoupled_smoothed_aggregation(blocks, theta: float, n=None) -> AggregationMap:
    """Aggregate each rank's diagonal block independently.

    ``blocks`` is a sequence of ``(global_rows, local_block)`` pairs (see
    :func:`local_blocks`) or of bare blocks, which are then taken to hold
    consecutive global rows. Aggregates never cross blocks.
    """
    pairs = []
    start = 0
    for b in blocks:
        if isinstance(b, CsrMatrix):
            rows = np.arange(start, start + b.nrows)
            pairs.append((rows, b))
        else:
            pairs.append((np.asarray(b[0]), b[1]))
        start += pairs[-1][1].nrows
    n = sum(b.nrows for _, b in pairs) if n is None else n
    labels = np.full(n, -1, dtype=np.int64)
    offset = 0
    for rows, blk in pairs:
        loc = vanek_aggregation(blk, theta)
        labels[rows] = loc + offset
        offset += int(loc.max(initial=-1)) + 1
    if np.any(labels < 0):
        raise ValueError("blocks do not cover every row")
    return AggregationMap.from_labels(labels)
