"""Regions of R^n and the fine lattice quadrature used to integrate over them.

Grid cells are centered at the grid nodes. A cell contributes to a region in
proportion to the fraction of its `SUBDIVISION**n` subcell centers that lie in the
region, i.e. the cell is subdivided twice and every subcell is tested at its center.
The same fine lattice, extended to the whole space, defines the quadrature measure of
a region.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gamma

from bgw_bench.types import Interval, Point, Points

SUBDIVISION = 4


def points_dist(points1: Points, points2: Points) -> np.ndarray[float]:
    """Return distances of all point pairs from given set of points.

    Parameters
    ----------
    points1
        2d array where rows represent points.
    points2
        2d array where rows represent points.

    Returns
    -------
    distances
        2d array where distance of `points1[i]` and `points2[j]` is stored at position
        `[i, j]`.
    """
    if points1.shape[1] == 1:
        return np.abs(points1[:, 0, np.newaxis] - points2[np.newaxis, :, 0])
    diff = points1[:, np.newaxis, :] - points2[np.newaxis, :, :]
    return np.linalg.norm(diff, axis=2)


def ball_volume(n: int, radius: float) -> float:
    """Return the Lebesgue measure of a ball of given radius in R^n."""
    return math.pi ** (n / 2) / gamma(n / 2 + 1) * radius**n


def _as_center(center: Sequence[float] | float | None, n: int) -> np.ndarray:
    if center is None:
        return np.zeros(n)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.shape == (1,) and n > 1:
        return np.full(n, center[0])
    return center


class Region(ABC):
    """Measurable subset of R^n used as an integration domain."""

    @abstractmethod
    def contains(self, points: Points) -> np.ndarray[bool]:
        """Return a boolean mask of the rows of `points` lying in the region."""
        pass

    @abstractmethod
    def measure(self, n: int) -> float:
        """Return the exact Lebesgue measure of the region in R^n."""
        pass

    @abstractmethod
    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return the lower and upper corner of the bounding box."""
        pass

    @abstractmethod
    def center_point(self, n: int) -> Point:
        pass

    @abstractmethod
    def intervals(self) -> list[Interval]:
        """Return the region in 1D as a union of disjoint intervals."""
        pass

    @abstractmethod
    def _fine_count(self, n: int, offset: float, step: float) -> int:
        """Count fine lattice points `offset + t * step` (t integer) in the region."""
        pass

    def exact_measure(self) -> Fraction:
        """Return the 1D measure as an exact rational."""
        return sum(
            (Fraction(upper) - Fraction(lower) for lower, upper in self.intervals()),
            Fraction(0),
        )


class Box(Region):
    """Half-open box lower <= x < upper."""

    def __init__(self, lower: Sequence[float] | float, upper: Sequence[float] | float):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))

    def _corners(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return _as_center(self.lower, n), _as_center(self.upper, n)

    def contains(self, points: Points) -> np.ndarray[bool]:
        lower, upper = self._corners(points.shape[1])
        return np.all((points >= lower) & (points < upper), axis=1)

    def measure(self, n: int) -> float:
        lower, upper = self._corners(n)
        return float(np.prod(np.clip(upper - lower, 0, None)))

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self._corners(n)

    def center_point(self, n: int) -> Point:
        lower, upper = self._corners(n)
        return (lower + upper) / 2

    def intervals(self) -> list[Interval]:
        return [(float(self.lower[0]), float(self.upper[0]))]

    def _fine_count(self, n: int, offset: float, step: float) -> int:
        lower, upper = self._corners(n)
        return math.prod(
            _count_in_interval(lo, up, offset, step) for lo, up in zip(lower, upper)
        )

    def __repr__(self) -> str:
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(Region):
    """Open ball |x - center| < radius."""

    def __init__(self, radius: float, center: Sequence[float] | float | None = None):
        self.radius = float(radius)
        self.center = center

    def contains(self, points: Points) -> np.ndarray[bool]:
        center = _as_center(self.center, points.shape[1])
        return np.linalg.norm(points - center, axis=1) < self.radius

    def measure(self, n: int) -> float:
        return ball_volume(n, self.radius)

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        center = _as_center(self.center, n)
        return center - self.radius, center + self.radius

    def center_point(self, n: int) -> Point:
        return _as_center(self.center, n)

    def intervals(self) -> list[Interval]:
        c = float(_as_center(self.center, 1)[0])
        return [(c - self.radius, c + self.radius)]

    def exact_measure(self) -> Fraction:
        return 2 * Fraction(self.radius)

    def _fine_count(self, n: int, offset: float, step: float) -> int:
        return _count_in_ball(self.radius, _as_center(self.center, n), offset, step)

    def __repr__(self) -> str:
        return f"Ball({self.radius}, center={self.center})"


class Annulus(Region):
    """Annulus inner <= |x - center| < outer."""

    def __init__(
        self,
        inner: float,
        outer: float,
        center: Sequence[float] | float | None = None,
    ):
        self.inner = float(inner)
        self.outer = float(outer)
        self.center = center

    def contains(self, points: Points) -> np.ndarray[bool]:
        center = _as_center(self.center, points.shape[1])
        dist = np.linalg.norm(points - center, axis=1)
        return (dist >= self.inner) & (dist < self.outer)

    def measure(self, n: int) -> float:
        return ball_volume(n, self.outer) - ball_volume(n, self.inner)

    def bounds(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        center = _as_center(self.center, n)
        return center - self.outer, center + self.outer

    def center_point(self, n: int) -> Point:
        return _as_center(self.center, n)

    def intervals(self) -> list[Interval]:
        c = float(_as_center(self.center, 1)[0])
        return [(c - self.outer, c - self.inner), (c + self.inner, c + self.outer)]

    def exact_measure(self) -> Fraction:
        return 2 * (Fraction(self.outer) - Fraction(self.inner))

    def _fine_count(self, n: int, offset: float, step: float) -> int:
        center = _as_center(self.center, n)
        return _count_in_ball(self.outer, center, offset, step) - _count_in_ball(
            self.inner, center, offset, step
        )

    def __repr__(self) -> str:
        return f"Annulus({self.inner}, {self.outer}, center={self.center})"


def dyadic_ball(j: int, center: Sequence[float] | float | None = None) -> Ball:
    """Return the ball of radius 2^j."""
    return Ball(2.0**j, center)


def dyadic_annulus(j: int, center: Sequence[float] | float | None = None) -> Annulus:
    """Return the annulus 2^j <= |x| < 2^(j+1)."""
    return Annulus(2.0**j, 2.0 ** (j + 1), center)


def enlarged_annulus(
    k: int, l: int, center: Sequence[float] | float | None = None
) -> Annulus:
    """Return the annulus 2^(l-1) <= |x| < 2^(k+l+3) covering the annuli j+l, j<=k+1."""
    return Annulus(2.0 ** (l - 1), 2.0 ** (k + l + 3), center)


def _count_in_interval(lower: float, upper: float, offset: float, step: float) -> int:
    """Count integers t with lower <= offset + t * step < upper."""
    if upper <= lower:
        return 0
    first = math.ceil((lower - offset) / step)
    last = math.ceil((upper - offset) / step)
    return max(last - first, 0)


def _count_in_ball(radius: float, center: Point, offset: float, step: float) -> int:
    if radius <= 0:
        return 0
    if len(center) == 1:
        lower, upper = center[0] - radius, center[0] + radius
        first = math.floor((lower - offset) / step) + 1
        last = math.ceil((upper - offset) / step) - 1
        return max(last - first + 1, 0)

    cx, cy = center
    rows_first = math.floor((cy - radius - offset) / step) + 1
    rows_last = math.ceil((cy + radius - offset) / step) - 1
    if rows_last < rows_first:
        return 0
    ys = offset + step * np.arange(rows_first, rows_last + 1)
    half_width = np.sqrt(np.clip(radius**2 - (ys - cy) ** 2, 0, None))
    first = np.floor((cx - half_width - offset) / step) + 1
    last = np.ceil((cx + half_width - offset) / step) - 1
    return int(np.clip(last - first + 1, 0, None).sum())


def _fine_offset(half_width: float, h: float) -> tuple[float, float]:
    step = h / SUBDIVISION
    return -half_width - h / 2 + step / 2, step


def subcell_offsets(n: int, h: float) -> Points:
    """Return offsets of the subcell centers relative to the cell center."""
    step = h / SUBDIVISION
    offsets_1d = -h / 2 + step * (np.arange(SUBDIVISION) + 0.5)
    grids = np.meshgrid(*([offsets_1d] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def lattice_measure(n: int, half_width: float, h: float, region: Region) -> float:
    """Return the quadrature measure of a region.

    The measure is (h / SUBDIVISION)^n times the number of fine lattice points of the
    grid with given half-width and spacing, extended to the whole space, lying in the
    region. Regions too small to contain any fine lattice point get their exact
    measure.
    """
    offset, step = _fine_offset(half_width, h)
    count = region._fine_count(n, offset, step)
    if count == 0:
        return region.measure(n)
    return count * step**n


def cell_weights(
    n: int, half_width: float, h: float, region: Region
) -> tuple[np.ndarray[int], np.ndarray[float]]:
    """Return quadrature weights of the grid cells intersecting a region.

    Parameters
    ----------
    n
        Dimension of the grid.
    half_width
        The grid covers the box [-half_width, half_width]^n.
    h
        Grid spacing.
    region
        Integration domain.

    Returns
    -------
    indices
        Flat (row-major) indices of the grid nodes whose cells intersect the region.
    weights
        Corresponding weights, i.e. the cell volume times the fraction of the cell in
        the region.
    """
    n_nodes = int(round(2 * half_width / h)) + 1
    lower, upper = region.bounds(n)

    index_ranges = []
    for lo, up in zip(lower, upper):
        first = max(math.floor((lo + half_width) / h - 0.5), 0)
        last = min(math.ceil((up + half_width) / h + 0.5), n_nodes - 1)
        if last < first:
            return np.zeros(0, dtype=int), np.zeros(0)
        index_ranges.append(np.arange(first, last + 1))

    mesh = np.meshgrid(*index_ranges, indexing="ij")
    node_indices = np.stack([m.ravel() for m in mesh], axis=1)
    nodes = -half_width + h * node_indices

    offsets = subcell_offsets(n, h)
    subcenters = nodes[:, np.newaxis, :] + offsets[np.newaxis, :, :]
    inside = region.contains(subcenters.reshape(-1, n)).reshape(len(nodes), -1)
    fractions = inside.mean(axis=1)

    flat = np.ravel_multi_index(tuple(node_indices.T), (n_nodes,) * n)
    mask = fractions > 0
    weights = fractions[mask] * h**n

    if not mask.any():
        center = region.center_point(n)
        if np.all(np.abs(center) <= half_width + h / 2):
            # region smaller than a subcell, its whole mass goes to the nearest cell
            nearest = np.clip(np.rint((center + half_width) / h), 0, n_nodes - 1)
            index = np.ravel_multi_index(tuple(nearest.astype(int)), (n_nodes,) * n)
            return np.array([index]), np.array([region.measure(n)])

    return flat[mask], weights


def _box_exit_distance(points: Points, directions: Points, half_width: float):
    """Return distances from interior points to the box boundary along directions."""
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.full((len(points), len(directions)), np.inf)
        for axis in range(points.shape[1]):
            d = directions[np.newaxis, :, axis]
            x = points[:, np.newaxis, axis]
            t = np.where(d > 0, (half_width - x) / d, (-half_width - x) / d)
            t = np.where(d == 0, np.inf, t)
            dist = np.minimum(dist, t)
    return dist


def exterior_kernel_mass(
    points: Points,
    half_width: float,
    beta: float,
    n_angles: int = 256,
    block_size: int = 4096,
) -> np.ndarray[float]:
    """Integrate |x - y|^-(n + beta) over y outside the box [-half_width, half_width]^n.

    Parameters
    ----------
    points
        2d array of points inside the box.
    half_width
        Half-width of the box.
    beta
        Positive exponent.
    n_angles
        Number of directions of the midpoint rule over the circle (2D only).
    block_size
        Number of points processed at once.

    Returns
    -------
    mass
        The integral for every point.
    """
    n = points.shape[1]
    if n == 1:
        x = points[:, 0]
        return ((half_width - x) ** -beta + (half_width + x) ** -beta) / beta

    angles = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    mass = np.empty(len(points))
    for start in range(0, len(points), block_size):
        block = points[start : start + block_size]
        dist = _box_exit_distance(block, directions, half_width)
        mass[start : start + block_size] = (
            (dist**-beta).sum(axis=1) * (2 * np.pi / n_angles) / beta
        )
    return mass
