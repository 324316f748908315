"""Initial densities and their particle discretization.

The initial density v0 is sampled on the lattice of half-open cells
[i1 h, (i1+1) h) x ... x [id h, (id+1) h) that tile the truncation box

    O_T = (supp v0  union  supp_x m) + ball(2 a_sup T),

one particle per cell at the cell center x_i = h (i + 1/2), with volume
w_i = h^d and intensity nu_i = v0(x_i).  Cells where v0 vanishes are dropped
unless they can receive mutation influx (they intersect the mutation
x-support); dropped cells carry nu = 0 forever, so dropping never changes
the retained trajectories.

The lattice is anchored at the origin: cell boundaries at integer multiples
of h, particles at half-integer multiples.  With v0 = 1 on [0, 1] and
h = 1/4 this yields exactly 4 particles of total mass 1; a profile positive
on (0, 1) with h = 1/N yields exactly N particles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .model import Box, ModelSpec, as_points, nonlocal_field, pair_sum

__all__ = [
    "DiscretizationError",
    "SpacingError",
    "InitialDensity",
    "ParticleEnsemble",
    "SpacingReport",
    "MutationCheck",
    "partition_support",
    "check_spacing",
    "check_mutation_discretization",
    "build_profile",
    "PROFILES",
]


class DiscretizationError(RuntimeError):
    """The requested lattice produced no usable particles."""


class SpacingError(RuntimeError):
    """Degenerate particle geometry (duplicates, too few particles)."""


@dataclass(frozen=True)
class InitialDensity:
    """Initial profile: evaluator over point rows, declared support and order.

    evaluator(X(n,d)) -> (n,) must vanish identically outside `support`.
    `k_reg` is the declared Sobolev regularity order used by rate reports.
    """

    name: str
    evaluator: Callable
    support: Box
    k_reg: int = 1
    params: dict = field(default_factory=dict)

    def __call__(self, X) -> np.ndarray:
        pts = as_points(X, self.support.dim)
        vals = np.asarray(self.evaluator(pts), dtype=float)
        return np.where(self.support.contains(pts), vals, 0.0)

    def total_mass(self, n_grid: int = 20001) -> float:
        """Trapezoid mass of the profile over its support (1D only)."""
        if self.support.dim != 1:
            raise NotImplementedError("total_mass is a 1D convenience")
        x = np.linspace(self.support.lo[0], self.support.hi[0], n_grid)
        return float(np.trapezoid(self(x[:, None]), x))


@dataclass
class ParticleEnsemble:
    """Weighted particle state (x_i, w_i, nu_i) at one time.

    The represented measure is sum_i nu_i w_i delta_{x_i}; `index_set` keeps
    contiguous integer labels so diagnostics can refer to particles stably.
    """

    time: float
    positions: np.ndarray   # (n, d)
    volumes: np.ndarray     # (n,)
    intensities: np.ndarray  # (n,)
    h: float
    index_set: np.ndarray = None  # (n,) int64

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.volumes = np.asarray(self.volumes, dtype=float)
        self.intensities = np.asarray(self.intensities, dtype=float)
        n = self.positions.shape[0]
        if self.volumes.shape != (n,) or self.intensities.shape != (n,):
            raise ValueError("ensemble arrays have inconsistent lengths")
        if self.index_set is None:
            self.index_set = np.arange(n, dtype=np.int64)
        else:
            self.index_set = np.asarray(self.index_set, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def alpha(self) -> np.ndarray:
        """Per-particle masses nu_i w_i."""
        return self.intensities * self.volumes

    def mass(self) -> float:
        return float(pair_sum(self.alpha()))

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            time=self.time,
            positions=self.positions.copy(),
            volumes=self.volumes.copy(),
            intensities=self.intensities.copy(),
            h=self.h,
            index_set=self.index_set.copy(),
        )


def active_box(model: ModelSpec, T: float) -> Box:
    """Truncation box O_T: supports padded by the maximal displacement 2 a_sup T."""
    box = model.support_v0
    if model.support_m_x is not None:
        box = box.union(model.support_m_x)
    return box.expand(2.0 * model.a_sup * T)


def partition_support(v0: InitialDensity, model: ModelSpec, h: float, T: float,
                      drop_empty: bool = True) -> ParticleEnsemble:
    """Lattice discretization of v0 on the truncation box O_T.

    Cells are [ih, (i+1)h)^d with particles at centers h(i+1/2) in
    lexicographic lattice order; w_i = h^d, nu_i = v0(x_i).  Empty cells
    (nu = 0) are dropped unless drop_empty=False or they intersect the
    mutation x-support (those can gain intensity later).
    """
    if h <= 0:
        raise DiscretizationError("h must be positive")
    if v0.support.dim != model.dim:
        raise DiscretizationError("profile/model dimension mismatch")
    box = active_box(model, T).union(v0.support)
    lo_idx = np.floor(box.lo / h).astype(np.int64)
    hi_idx = np.ceil(box.hi / h).astype(np.int64) - 1
    counts = hi_idx - lo_idx + 1
    if np.any(counts < 1):
        raise DiscretizationError("h larger than the truncation box")
    total = int(np.prod(counts.astype(float)))
    if total > 50_000_000:
        raise DiscretizationError(f"lattice of {total} cells is unreasonably large")

    axes = [lo_idx[k] + np.arange(counts[k], dtype=np.int64) for k in range(model.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([m.reshape(-1) for m in mesh], axis=1)  # lexicographic
    centers = (idx + 0.5) * h

    nu = v0(centers)
    if drop_empty:
        keep = nu != 0.0
        if model.support_m_x is not None:
            # cells that intersect the mutation x-support can gain intensity
            cell_lo = idx * h
            cell_hi = (idx + 1) * h
            overlaps = np.all(
                (cell_hi >= model.support_m_x.lo) & (cell_lo <= model.support_m_x.hi),
                axis=1)
            keep = keep | overlaps
    else:
        keep = np.ones(nu.shape[0], dtype=bool)

    if not np.any(keep):
        raise DiscretizationError(
            "no particles: v0 vanishes at every lattice center (h too coarse?)")

    positions = centers[keep]
    intensities = nu[keep]
    n = positions.shape[0]
    volumes = np.full(n, float(h) ** model.dim)
    return ParticleEnsemble(
        time=0.0, positions=positions, volumes=volumes,
        intensities=intensities, h=float(h),
        index_set=np.arange(n, dtype=np.int64),
    )


class SpacingReport(NamedTuple):
    """Measured spacing constants relative to h (positions) and h^d (volumes)."""

    position_c: float  # min nearest-neighbor distance / h
    position_C: float  # max nearest-neighbor distance / h
    volume_c: float    # min w_i / h^d
    volume_C: float    # max w_i / h^d


def check_spacing(ens: ParticleEnsemble) -> SpacingReport:
    """Nearest-neighbor spacing and volume constants of the ensemble.

    A fresh lattice reports all four constants equal to 1.  Duplicate
    positions raise SpacingError (the interaction sums would degenerate).
    """
    if ens.n < 2:
        raise SpacingError("spacing needs at least 2 particles")
    tree = cKDTree(ens.positions)
    dist, _ = tree.query(ens.positions, k=2)
    nearest = dist[:, 1]
    if np.any(nearest == 0.0):
        i = int(np.argmax(nearest == 0.0))
        raise SpacingError(f"duplicate particle positions (index {i})")
    vol_scale = ens.volumes / ens.h ** ens.dim
    return SpacingReport(
        position_c=float(np.min(nearest) / ens.h),
        position_C=float(np.max(nearest) / ens.h),
        volume_c=float(np.min(vol_scale)),
        volume_C=float(np.max(vol_scale)),
    )


class MutationCheck(NamedTuple):
    """Result of the discrete mutation-sum bound check; truthy when it holds."""

    ok: bool
    worst: float
    bound: float
    witness: Optional[tuple]  # (t, y) achieving the worst sum

    def __bool__(self) -> bool:  # noqa: D105
        return self.ok


def check_mutation_discretization(ens: ParticleEnsemble, model: ModelSpec,
                                  t_samples: Sequence[float],
                                  y_samples) -> MutationCheck:
    """Check sup_{t,y} sum_i w_i m(t, x_i, y, I_d(t, x_i)) < K_const + r_star/2.

    This is the discrete smallness condition on mutation needed for the mass
    bound to survive discretization.  Models without mutation satisfy it
    trivially.
    """
    bound = model.K_const + 0.5 * model.r_star
    if model.mutation is None:
        return MutationCheck(ok=True, worst=0.0, bound=bound, witness=None)
    Y = as_points(y_samples, model.dim)
    alpha = ens.alpha()
    worst = -math.inf
    witness = None
    for t in t_samples:
        I_d = nonlocal_field(model.kernel_d, t, ens.positions, ens.positions, alpha)
        # rows: particles, cols: probe points y
        M = np.asarray(model.mutation(t, ens.positions, Y, I_d))
        sums = pair_sum(M * ens.volumes[:, None], axis=0)
        j = int(np.argmax(sums))
        if sums[j] > worst:
            worst = float(sums[j])
            witness = (float(t), Y[j].copy())
    return MutationCheck(ok=worst < bound, worst=worst, bound=bound, witness=witness)


# ---------------------------------------------------------------------------
# initial profile presets


def _bump_1d(u: np.ndarray) -> np.ndarray:
    # exp(1 - 1/(1-u^2)) on |u| < 1, extended by zero
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def build_profile(name: str, **params) -> InitialDensity:
    if name not in PROFILES:
        raise KeyError(f"unknown profile {name!r}; known: {sorted(PROFILES)}")
    return PROFILES[name](**params)


def _profile_one_minus_x() -> InitialDensity:
    support = Box([0.0], [1.0])
    return InitialDensity(
        name="one-minus-x",
        evaluator=lambda X: 1.0 - X[:, 0],
        support=support, k_reg=1)


def _profile_x_one_minus_x() -> InitialDensity:
    support = Box([0.0], [1.0])
    return InitialDensity(
        name="x-one-minus-x",
        evaluator=lambda X: X[:, 0] * (1.0 - X[:, 0]),
        support=support, k_reg=1)


def _profile_x_squared() -> InitialDensity:
    support = Box([0.0], [1.0])
    return InitialDensity(
        name="x-squared",
        evaluator=lambda X: X[:, 0] ** 2,
        support=support, k_reg=1)


def _profile_const(value: float = 6.0, lo: float = 0.05, hi: float = 1.0) -> InitialDensity:
    support = Box([lo], [hi])
    return InitialDensity(
        name="const",
        evaluator=lambda X: np.full(X.shape[0], float(value)),
        support=support, k_reg=1,
        params={"value": value, "lo": lo, "hi": hi})


def _profile_const6() -> InitialDensity:
    # constant 6 on [0.05, 1]: the support stays clear of the unstable rest
    # point at 0, so the long-run limit is a single cluster at 1
    return _profile_const(6.0, 0.05, 1.0)


def _profile_bump(center=0.5, width=0.3, scale: float = 1.0) -> InitialDensity:
    """Smooth compactly supported bump (product form in d dimensions)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    width = np.broadcast_to(np.asarray(width, dtype=float), center.shape).copy()
    support = Box(center - width, center + width)

    def evaluator(X):
        vals = np.full(X.shape[0], float(scale))
        for k in range(center.shape[0]):
            vals = vals * _bump_1d((X[:, k] - center[k]) / width[k])
        return vals

    return InitialDensity(
        name="bump", evaluator=evaluator, support=support, k_reg=6,
        params={"center": center.tolist(), "width": width.tolist(), "scale": scale})


def _profile_bump_pair(centers=((-0.5, 0.0), (0.5, 0.0)), width=0.35,
                       scale: float = 1.0) -> InitialDensity:
    """Sum of two smooth bumps; the two-cluster initial condition."""
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    width = float(width)
    support = Box(c.min(axis=0) - width, c.max(axis=0) + width)

    def evaluator(X):
        vals = np.zeros(X.shape[0])
        for center in c:
            term = np.full(X.shape[0], float(scale))
            for k in range(c.shape[1]):
                term = term * _bump_1d((X[:, k] - center[k]) / width)
            vals = vals + term
        return vals

    return InitialDensity(
        name="bump-pair", evaluator=evaluator, support=support, k_reg=6,
        params={"centers": c.tolist(), "width": width, "scale": scale})


PROFILES = {
    "one-minus-x": _profile_one_minus_x,
    "x-one-minus-x": _profile_x_one_minus_x,
    "x-squared": _profile_x_squared,
    "const": _profile_const,
    "const6": _profile_const6,
    "bump": _profile_bump,
    "bump-pair": _profile_bump_pair,
}
