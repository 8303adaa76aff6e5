"""Preconditioner recipes and study descriptions."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from .smoothers import SmootherSpec

LABELS = ("MLVSMATCH3", "MLVSMATCH4", "MLVSBM", "JACOBI", "NONE")
AMG_LABELS = ("MLVSMATCH3", "MLVSMATCH4", "MLVSBM")
_MATCH_SWEEPS = {"MLVSMATCH3": 3, "MLVSMATCH4": 4}


@dataclass(frozen=True)
class CoarsestSolverSpec:
    """Coarsest-level solve: FCG + block-Jacobi/ILU(1), or a direct solve."""

    method: str = "fcg"  # fcg | direct
    rel_tol: float = 1e-3
    max_iters: int = 30

    def __post_init__(self):
        if self.method not in ("fcg", "direct"):
            raise ValueError(f"unknown coarsest method {self.method!r}")


@dataclass(frozen=True)
class PreconditionerConfig:
    label: str = "MLVSMATCH3"
    matching_sweeps: int | None = None   # None: 3 or 4 from the label
    theta: float = 0.08                  # MLVSBM strength threshold at level 0
    smoother: SmootherSpec = field(default_factory=SmootherSpec)
    coarsest: CoarsestSolverSpec = field(default_factory=CoarsestSolverSpec)
    coarse_size_per_rank: int = 200
    coarse_size: int | None = None       # absolute override of 200 * n_ranks
    max_levels: int = 20

    def __post_init__(self):
        label = self.label.upper()
        if label not in LABELS:
            raise ValueError(f"unknown preconditioner {self.label!r}; "
                             f"choose from {', '.join(LABELS)}")
        object.__setattr__(self, "label", label)
        if self.matching_sweeps is None and label in _MATCH_SWEEPS:
            object.__setattr__(self, "matching_sweeps", _MATCH_SWEEPS[label])
        if self.matching_sweeps is not None and self.matching_sweeps < 1:
            raise ValueError("matching_sweeps must be >= 1")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")

    @property
    def is_amg(self) -> bool:
        return self.label in AMG_LABELS

    @property
    def max_aggregate_size(self) -> int | None:
        if self.label in _MATCH_SWEEPS:
            return 2 ** self.matching_sweeps
        return None

    def coarse_threshold(self, n_ranks: int) -> int:
        if self.coarse_size is not None:
            return self.coarse_size
        return self.coarse_size_per_rank * n_ranks

    def with_overrides(self, **kw) -> "PreconditionerConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StudySpec:
    """A strong or weak scaling study.

    Strong mode: one problem size per entry of ``sizes`` (global points per
    side), all run on every rank count. Weak mode: ``sizes`` and ``ranks`` are
    paired, so the size per rank is meant to stay fixed.
    """

    mode: str = "weak"                 # strong | weak
    problem: str = "poisson3d"
    sizes: tuple = (16, 32)
    ranks: tuple = (1, 8)
    tol: float = 1e-3
    max_iters: int = 500
    time_steps: int = 20
    seed: int = 0
    partition: str = "contiguous"
    perturbation: float = 1e-2

    def __post_init__(self):
        if self.mode not in ("strong", "weak"):
            raise ValueError(f"mode must be strong or weak, got {self.mode!r}")
        if self.problem not in ("poisson1d", "poisson2d", "poisson3d"):
            raise ValueError(f"unknown problem {self.problem!r}")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if self.mode == "weak":
            if len(self.sizes) != len(self.ranks):
                raise ValueError("weak studies pair each size with one rank count")
            per_rank = {n ** self.dim / r for n, r in zip(self.sizes, self.ranks)}
            if len(per_rank) != 1:
                raise ValueError("weak studies need a constant size per rank")
        if self.time_steps < 1 or not self.tol > 0:
            raise ValueError("time_steps must be >= 1 and tol > 0")

    @property
    def dim(self) -> int:
        return int(self.problem[-2])

    def cells(self):
        """(n_per_side, n_ranks) pairs in run order."""
        if self.mode == "weak":
            return list(zip(self.sizes, self.ranks))
        return [(n, r) for n in self.sizes for r in self.ranks]
