"""Empirical 2-Wasserstein distances between equal-weight point clouds.

Three backends:

- exact 1-D quantile coupling (sort both samples),
- exact optimal assignment on the squared-Euclidean cost (small N),
- sliced estimate averaging exact 1-D distances over random directions.

Totals are accumulated with `math.fsum`, so distances are exactly symmetric
and invariant to particle order.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._assignment import solve_assignment_points
from .rng import keyed_standard_normals

__all__ = [
    "PointCloud",
    "W2Method",
    "W2Estimate",
    "w2_exact_1d",
    "w2_assignment",
    "w2_sliced",
    "w2_auto",
    "displacement_interpolate",
    "DEFAULT_ASSIGNMENT_CAP",
]

DEFAULT_ASSIGNMENT_CAP = 2048


class W2Method(str, enum.Enum):
    EXACT_1D = "exact_1d"
    ASSIGNMENT = "assignment"
    SLICED = "sliced"


@dataclass(frozen=True)
class PointCloud:
    """Uniformly weighted empirical measure: an (N, d) matrix of points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must form a nonempty (N, d) matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class W2Estimate:
    value: float
    method: W2Method
    n_projections: int | None = None
    standard_error: float | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("value must be nonnegative")
        if (self.standard_error is not None) != (self.method is W2Method.SLICED):
            raise ValueError("standard_error is reported exactly for the sliced method")


def _sorted_w2_sq_equal(a: np.ndarray, b: np.ndarray) -> float:
    """Exact squared 1-D distance between equal-size samples."""
    diffs = np.sort(a) - np.sort(b)
    return math.fsum(diffs * diffs) / a.size


def _quantile_w2_sq(a: np.ndarray, b: np.ndarray) -> float:
    """Exact squared 1-D distance between samples of possibly unequal sizes.

    Integrates the squared gap between the two step quantile functions over
    the merged breakpoint grid.
    """
    if a.size == b.size:
        return _sorted_w2_sq_equal(a, b)
    xa, xb = np.sort(a), np.sort(b)
    grid = np.union1d(np.arange(1, a.size) / a.size, np.arange(1, b.size) / b.size)
    edges = np.concatenate(([0.0], grid, [1.0]))
    widths = np.diff(edges)
    mids = (edges[:-1] + edges[1:]) / 2.0
    qa = xa[np.minimum((mids * a.size).astype(int), a.size - 1)]
    qb = xb[np.minimum((mids * b.size).astype(int), b.size - 1)]
    return math.fsum(widths * (qa - qb) ** 2)


def w2_exact_1d(a: PointCloud, b: PointCloud) -> W2Estimate:
    """Exact 1-D distance via the monotone (quantile) coupling."""
    if a.dim != 1 or b.dim != 1:
        raise ValueError("exact 1-D distance requires 1-D clouds")
    if a.n != b.n:
        raise ValueError("clouds must have equal sizes")
    value = math.sqrt(_sorted_w2_sq_equal(a.points[:, 0], b.points[:, 0]))
    return W2Estimate(value, W2Method.EXACT_1D)


def _optimal_assignment(a: PointCloud, b: PointCloud) -> tuple[np.ndarray, float]:
    """Optimal permutation and total squared cost between two equal clouds."""
    perm = solve_assignment_points(a.points, b.points)
    matched_costs = np.sum((a.points - b.points[perm]) ** 2, axis=1)
    total = math.fsum(matched_costs)
    return perm, total


def w2_assignment(a: PointCloud, b: PointCloud,
                  cap: int = DEFAULT_ASSIGNMENT_CAP) -> W2Estimate:
    """Exact distance via optimal assignment on the squared-Euclidean cost."""
    if a.dim != b.dim:
        raise ValueError("clouds must share a dimension")
    if a.n != b.n:
        raise ValueError("clouds must have equal sizes")
    if a.n > cap:
        raise ValueError(f"cloud size {a.n} exceeds the assignment cap {cap}")
    _, total = _optimal_assignment(a, b)
    return W2Estimate(math.sqrt(max(total, 0.0) / a.n), W2Method.ASSIGNMENT)


def _unit_directions(dim: int, n_projections: int, seed: int) -> np.ndarray:
    """Deterministic uniform directions, one keyed stream per projection."""
    raw = np.vstack([
        keyed_standard_normals(seed, j, np.zeros(1, dtype=np.uint64), dim)[0]
        for j in range(n_projections)
    ])
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return raw / norms


def w2_sliced(a: PointCloud, b: PointCloud, n_projections: int = 128,
              seed: int = 0, max_workers: int | None = None) -> W2Estimate:
    """Sliced estimate: root of the mean squared 1-D distance over directions.

    The reported standard error is the projection-average error propagated
    through the square root; it does not account for sampling noise in the
    clouds themselves.
    """
    if a.dim != b.dim:
        raise ValueError("clouds must share a dimension")
    if n_projections < 1:
        raise ValueError("n_projections must be positive")
    directions = _unit_directions(a.dim, n_projections, seed)
    proj_a = a.points @ directions.T
    proj_b = b.points @ directions.T

    def one(j: int) -> float:
        return _quantile_w2_sq(proj_a[:, j], proj_b[:, j])

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            sq = list(pool.map(one, range(n_projections)))
    else:
        sq = [one(j) for j in range(n_projections)]
    sq = np.asarray(sq)
    mean_sq = math.fsum(sq) / n_projections
    value = math.sqrt(max(mean_sq, 0.0))
    se_sq = float(np.std(sq, ddof=1) / math.sqrt(n_projections)) if n_projections > 1 else 0.0
    se = se_sq / (2.0 * value) if value > 0 else se_sq
    return W2Estimate(value, W2Method.SLICED, n_projections=n_projections,
                      standard_error=se)


def w2_auto(a: PointCloud, b: PointCloud, cap: int = DEFAULT_ASSIGNMENT_CAP,
            n_projections: int = 128, seed: int = 0) -> W2Estimate:
    """Pick the strongest applicable backend: exact 1-D, assignment, or sliced."""
    if a.dim == 1 and b.dim == 1 and a.n == b.n:
        return w2_exact_1d(a, b)
    if a.n == b.n and a.n <= cap:
        return w2_assignment(a, b, cap=cap)
    return w2_sliced(a, b, n_projections=n_projections, seed=seed)


def displacement_interpolate(a: PointCloud, b: PointCloud, t: float,
                             cap: int = DEFAULT_ASSIGNMENT_CAP) -> PointCloud:
    """Point t along the empirical constant-speed geodesic from a to b.

    Matches the clouds by optimal assignment and moves each point linearly
    toward its partner.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if a.dim != b.dim:
        raise ValueError("clouds must share a dimension")
    if a.n != b.n:
        raise ValueError("clouds must have equal sizes")
    if a.n > cap:
        raise ValueError(f"cloud size {a.n} exceeds the assignment cap {cap}")
    perm, _ = _optimal_assignment(a, b)
    return PointCloud((1.0 - t) * a.points + t * b.points[perm])
