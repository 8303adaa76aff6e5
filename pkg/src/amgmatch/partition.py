"""Simulated row-block ranks and partial-row to full-row assembly.

A matrix assembled element by element on several ranks is held in *partial
row* form: each rank stores the contributions of its own elements, so a row
near a subdomain interface may have pieces on several ranks and its true
value is their sum. Solvers want *full rows*: every row complete on the rank
owning it. The conversion is split into

* :func:`discover_halo` -- find which remote contributions each owner needs
  (only when the structure changes), and
* :func:`assemble_full_rows` -- move the values and sum them (every time the
  coefficients change).

Message traffic of both phases is recorded so studies can count it.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .problems import ElementSet
from .sparse import CsrMatrix


class StructureChangedError(RuntimeError):
    """Fragment structure differs from the one the halo plan was built for."""


@dataclass(frozen=True)
class Message:
    phase: str      # request | reply | values
    src: int
    dst: int
    n_entries: int


@dataclass(frozen=True, eq=False)
class RankPartition:
    n: int
    n_ranks: int
    owner: np.ndarray
    scheme: str = "contiguous"
    grid_dims: tuple | None = None
    halo_map: tuple | None = None       # per rank: (k, 3) array of (remote, row, col)
    halo_pos: tuple | None = field(default=None, repr=False)
    fingerprint: tuple | None = None
    messages: tuple = ()

    def __post_init__(self):
        owner = np.asarray(self.owner, dtype=np.int64)
        owner.flags.writeable = False
        object.__setattr__(self, "owner", owner)
        if owner.shape != (self.n,):
            raise ValueError("owner must cover every row")
        if self.n and (owner.min() < 0 or owner.max() >= self.n_ranks):
            raise ValueError("owner entries must be rank ids")

    @property
    def local_rows(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.owner == p) for p in range(self.n_ranks)]

    def message_volume(self, phase=None) -> int:
        return sum(m.n_entries for m in self.messages if phase in (None, m.phase))

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> str:
        ranges = {}
        for p, rows in enumerate(self.local_rows):
            runs = []
            if rows.size:
                breaks = np.flatnonzero(np.diff(rows) != 1) + 1
                for seg in np.split(rows, breaks):
                    runs.append([int(seg[0]), int(seg[-1]) + 1])
            ranges[str(p)] = runs
        return json.dumps({"n": self.n, "n_ranks": self.n_ranks, "scheme": self.scheme,
                           "grid_dims": list(self.grid_dims) if self.grid_dims else None,
                           "ranges": ranges}, indent=1)

    @classmethod
    def from_json(cls, text) -> "RankPartition":
        d = json.loads(text)
        owner = np.full(d["n"], -1, dtype=np.int64)
        for p, runs in d["ranges"].items():
            for a, b in runs:
                owner[a:b] = int(p)
        if np.any(owner < 0):
            raise ValueError("ranges do not cover every row")
        gd = tuple(d["grid_dims"]) if d.get("grid_dims") else None
        return cls(d["n"], d["n_ranks"], owner, d.get("scheme", "contiguous"), gd)


def _morton_codes(dims) -> np.ndarray:
    dims = tuple(int(g) for g in dims)
    coords = np.stack([a.ravel() for a in np.meshgrid(*[np.arange(g) for g in dims],
                                                      indexing="ij")], axis=1)
    bits = max(1, int(np.ceil(np.log2(max(dims)))))
    code = np.zeros(coords.shape[0], dtype=np.int64)
    d = len(dims)
    for b in range(bits):
        for ax in range(d):
            code |= ((coords[:, ax] >> b) & 1) << (b * d + (d - 1 - ax))
    return code


def make_partition(n: int, n_ranks: int, scheme="contiguous", grid_dims=None) -> RankPartition:
    """Balanced row-block partition.

    ``contiguous`` gives rank ``p`` a consecutive block, the first ``n % n_ranks``
    ranks taking one extra row. ``sfc_morton`` orders grid points along a
    Morton (Z-order) curve and cuts that order into balanced blocks; it needs
    ``grid_dims`` with ``prod(grid_dims) == n``.
    """
    if not 1 <= n_ranks <= n:
        raise ValueError(f"need 1 <= n_ranks <= n, got n_ranks={n_ranks}, n={n}")
    counts = np.full(n_ranks, n // n_ranks)
    counts[: n % n_ranks] += 1
    block_of_pos = np.repeat(np.arange(n_ranks), counts)
    if scheme == "contiguous":
        owner = block_of_pos
    elif scheme == "sfc_morton":
        if grid_dims is None:
            raise ValueError("sfc_morton needs grid_dims")
        if int(np.prod(grid_dims)) != n:
            raise ValueError("prod(grid_dims) must equal n")
        order = np.argsort(_morton_codes(grid_dims), kind="stable")
        owner = np.empty(n, dtype=np.int64)
        owner[order] = block_of_pos
    else:
        raise ValueError(f"unknown partition scheme {scheme!r}")
    return RankPartition(n, n_ranks, owner, scheme,
                         tuple(grid_dims) if grid_dims is not None else None)


# -- partial row matrices -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class PartialRowMatrix:
    n: int
    fragments: tuple   # one n x n CsrMatrix per rank, global indices

    def summed(self) -> CsrMatrix:
        """Global matrix: fragments added entrywise in ascending rank order."""
        return _sum_in_rank_order(self.n, [(f.row_indices(), f.col_indices, f.values)
                                           for f in self.fragments])

    def with_values(self, values) -> "PartialRowMatrix":
        """Same structure, new per-rank value arrays."""
        frags = tuple(CsrMatrix(f.nrows, f.ncols, f.row_offsets, f.col_indices, v)
                      for f, v in zip(self.fragments, values))
        return PartialRowMatrix(self.n, frags)


def _sum_in_rank_order(n, pieces) -> CsrMatrix:
    keys = [r * n + c for r, c, _ in pieces]
    allk = np.unique(np.concatenate(keys)) if keys else np.zeros(0, np.int64)
    acc = np.zeros(allk.size)
    for k, (_, _, v) in zip(keys, pieces):
        acc[np.searchsorted(allk, k)] += v   # keys unique within a piece
    return CsrMatrix.from_coo(n, n, allk // n, allk % n, acc)


def element_owner(nodes: np.ndarray, part: RankPartition) -> np.ndarray:
    """Elements go to the lowest rank owning any of their nodes."""
    return part.owner[nodes].min(axis=1)


def partial_row_assembly(element_sets, part: RankPartition) -> PartialRowMatrix:
    """Assemble each rank's elements into its own fragment."""
    rows = [[] for _ in range(part.n_ranks)]
    cols = [[] for _ in range(part.n_ranks)]
    vals = [[] for _ in range(part.n_ranks)]
    for es in element_sets:
        if not isinstance(es, ElementSet):
            es = ElementSet(*es)
        nodes = np.asarray(es.nodes, dtype=np.int64)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= part.n):
            raise IndexError("element references a node outside the partition")
        k = nodes.shape[1]
        r = np.repeat(nodes, k, axis=1).ravel()
        c = np.tile(nodes, (1, k)).ravel()
        v = np.asarray(es.local, dtype=np.float64).reshape(nodes.shape[0], k * k).ravel()
        eo = np.repeat(element_owner(nodes, part), k * k)
        for p in range(part.n_ranks):
            sel = eo == p
            rows[p].append(r[sel]); cols[p].append(c[sel]); vals[p].append(v[sel])
    frags = tuple(CsrMatrix.from_coo(part.n, part.n, np.concatenate(rows[p]),
                                     np.concatenate(cols[p]), np.concatenate(vals[p]))
                  for p in range(part.n_ranks))
    return PartialRowMatrix(part.n, frags)


def structure_fingerprint(pm: PartialRowMatrix) -> tuple:
    out = []
    for f in pm.fragments:
        h = hashlib.sha256()
        h.update(np.int64(f.nrows).tobytes())
        h.update(f.row_offsets.tobytes())
        h.update(f.col_indices.tobytes())
        out.append(h.hexdigest())
    return tuple(out)


def discover_halo(pm: PartialRowMatrix, part: RankPartition) -> RankPartition:
    """Find, per rank, the contributions it holds for rows owned elsewhere.

    Returns a copy of ``part`` with ``halo_map`` (sorted ``(remote, row, col)``
    records), the value positions used later for retrieval, the structure
    fingerprint, and the request/reply messages of the discovery exchange.
    """
    if len(pm.fragments) != part.n_ranks or pm.n != part.n:
        raise ValueError("fragments do not match the partition")
    halo, pos, msgs = [], [], []
    for p, f in enumerate(pm.fragments):
        if f.shape != (part.n, part.n):
            raise IndexError(f"fragment {p} is not indexed over the global range")
        r = f.row_indices()
        remote = part.owner[r]
        sel = np.flatnonzero(remote != p)
        order = np.lexsort((f.col_indices[sel], r[sel], remote[sel]))
        sel = sel[order]
        recs = np.stack([remote[sel], r[sel], f.col_indices[sel]], axis=1)
        halo.append(recs)
        pos.append(sel)
    # phase 1: holders tell owners what they hold; phase 2: owners acknowledge
    for p, recs in enumerate(halo):
        for q in np.unique(recs[:, 0]) if recs.size else ():
            k = int((recs[:, 0] == q).sum())
            msgs.append(Message("request", p, int(q), k))
    for m in list(msgs):
        msgs.append(Message("reply", m.dst, m.src, m.n_entries))
    return replace(part, halo_map=tuple(halo), halo_pos=tuple(pos),
                   fingerprint=structure_fingerprint(pm), messages=tuple(msgs))


@dataclass(frozen=True, eq=False)
class FullRowMatrix:
    n: int
    rows: tuple         # per rank: owned global rows, ascending
    blocks: tuple       # per rank: len(rows) x n CsrMatrix over global columns
    col_halo: tuple     # per rank: referenced global columns owned elsewhere
    messages: tuple = ()

    def to_global(self) -> CsrMatrix:
        R, C, V = [], [], []
        for rows, blk in zip(self.rows, self.blocks):
            R.append(rows[blk.row_indices()]); C.append(blk.col_indices); V.append(blk.values)
        return CsrMatrix.from_coo(self.n, self.n, np.concatenate(R),
                                  np.concatenate(C), np.concatenate(V))


def assemble_full_rows(pm: PartialRowMatrix, part: RankPartition) -> FullRowMatrix:
    """Sum every owned row from all ranks' contributions, ascending rank order.

    Needs a partition returned by :func:`discover_halo`. Only values travel:
    if the fragment structure changed since discovery the plan is stale and
    :class:`StructureChangedError` is raised.
    """
    if part.halo_map is None:
        raise RuntimeError("halo not discovered; call discover_halo first")
    if structure_fingerprint(pm) != part.fingerprint:
        raise StructureChangedError("matrix structure changed; rerun discover_halo")
    n = part.n
    owner = part.owner
    msgs = []
    # what each rank receives, grouped by destination
    incoming = [[None] * part.n_ranks for _ in range(part.n_ranks)]
    for p, (recs, pos) in enumerate(zip(part.halo_map, part.halo_pos)):
        vals = pm.fragments[p].values[pos]
        for q in np.unique(recs[:, 0]) if recs.size else ():
            sel = recs[:, 0] == q
            incoming[int(q)][p] = (recs[sel, 1], recs[sel, 2], vals[sel])
            msgs.append(Message("values", p, int(q), int(sel.sum())))
    rows_out, blocks, halos = [], [], []
    for q in range(part.n_ranks):
        f = pm.fragments[q]
        fr = f.row_indices()
        own = owner[fr] == q
        pieces = []
        for p in range(part.n_ranks):
            if p == q:
                pieces.append((fr[own], f.col_indices[own], f.values[own]))
            elif incoming[q][p] is not None:
                pieces.append(incoming[q][p])
        summed = _sum_in_rank_order(n, pieces) if pieces else CsrMatrix.from_coo(n, n, [], [], [])
        rows = np.flatnonzero(owner == q)
        S = summed.scipy()[rows]
        blk = CsrMatrix.from_scipy(S)
        rows_out.append(rows)
        blocks.append(blk)
        cols = np.unique(blk.col_indices)
        halos.append(cols[owner[cols] != q])
    return FullRowMatrix(n, tuple(rows_out), tuple(blocks), tuple(halos), tuple(msgs))
