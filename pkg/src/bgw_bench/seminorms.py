"""Grid estimators of the BMO, Hölder, fractional Sobolev and weighted sup norms.

Sup-type norms are estimated by maxima over finite candidate families, so they are
lower bounds of the continuum values. Integral norms are midpoint quadratures.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from bgw_bench.derivatives import derivative_grids
from bgw_bench.errors import EstimatorError
from bgw_bench.fields import (
    Field,
    GridField,
    GridSpec,
    Polynomial,
    as_grid_field,
    region_average,
)
from bgw_bench.parallel import block_ranges, map_blocks
from bgw_bench.types import Point, Points, Real, Values
from bgw_bench.utils import pairwise_sum
from geometry import Ball, dyadic_annulus, exterior_kernel_mass, points_dist

logger = logging.getLogger(__name__)

PAIR_BLOCK_ELEMENTS = 1 << 22
DEFAULT_CUBE_BUDGET = 1 << 22
Z_CANDIDATES_PER_AXIS = {1: 512, 2: 64}
INTEGER_ORDER_TOLERANCE = 1e-9


class SeminormKind(str, Enum):
    BMO = "bmo"
    HOLDER = "holder"
    SOBOLEV = "sobolev"
    WEIGHTED_SUP = "weighted_sup"


class Bias(str, Enum):
    LOWER_BOUND = "lower_bound"
    QUADRATURE_APPROX = "quadrature_approx"


@dataclass(frozen=True)
class SeminormReport:
    """Value of an estimated norm together with everything needed to reproduce it."""

    kind: SeminormKind
    value: float
    bias: Bias
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "bias": self.bias.value,
            "params": self.params,
            "meta": self.meta,
        }

    def to_row(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "bias": self.bias.value,
            **self.params,
        }


@dataclass(frozen=True)
class CandidateCubes:
    """Grid-aligned cubes of given side lengths (in cells) at grid-aligned positions.

    For every side all translations are used unless the number of samples touched,
    translations times side^n, exceeds `budget`. In that case the translations are
    evenly subsampled, always keeping the cube centered in the grid.
    """

    sides: tuple[int, ...]
    budget: int | None = DEFAULT_CUBE_BUDGET

    @classmethod
    def dyadic(cls, spec: GridSpec, budget: int | None = DEFAULT_CUBE_BUDGET):
        """Return cubes of side 2^t h for t = 0, ..., log2(2L / h)."""
        sides = []
        side = 1
        while side <= spec.cells:
            sides.append(side)
            side *= 2
        return cls(tuple(sides), budget)

    def starts(self, spec: GridSpec, side: int) -> np.ndarray[int]:
        """Return the lower corner indices used along every axis."""
        n_starts = spec.nodes_per_axis - side + 1
        if n_starts <= 0:
            return np.zeros(0, dtype=int)
        if self.budget is None or (n_starts * side) ** spec.n <= self.budget:
            return np.arange(n_starts)
        per_axis = max(int((self.budget / side**spec.n) ** (1 / spec.n)), 1)
        starts = np.rint(np.linspace(0, n_starts - 1, per_axis)).astype(int)
        return np.unique(np.append(starts, (n_starts - 1) // 2))

    def count(self, spec: GridSpec) -> int:
        return sum(len(self.starts(spec, side)) ** spec.n for side in self.sides)


def _side_oscillation(
    side_and_starts: tuple[int, np.ndarray], values: np.ndarray
) -> tuple[float, tuple[int, ...]]:
    side, starts = side_and_starts
    n = values.ndim
    windows = sliding_window_view(values, (side,) * n)
    if n == 1:
        cubes = windows[starts]
    else:
        cubes = windows[np.ix_(starts, starts)]
    axes = tuple(range(n, 2 * n))
    # oscillation is invariant under subtracting the value at the cube corner
    corner = cubes[(Ellipsis,) + (slice(0, 1),) * n]
    cubes = cubes - corner
    means = cubes.mean(axis=axes, keepdims=True)
    oscillation = np.abs(cubes - means).mean(axis=axes)
    best = np.unravel_index(np.argmax(oscillation), oscillation.shape)
    return float(oscillation[best]), tuple(int(starts[i]) for i in best)


def bmo_norm(
    f: Field,
    cube_family: CandidateCubes | None = None,
    spec: GridSpec | None = None,
    n_workers: int = 1,
) -> SeminormReport:
    """Estimate the BMO norm as the maximal mean oscillation over a cube family.

    Parameters
    ----------
    f
        Grid field, or analytic field together with `spec`.
    cube_family
        Candidate cubes, the dyadic family by default.
    spec
        Grid used to sample analytic fields.
    n_workers
        Number of worker processes.

    Returns
    -------
    report
    """
    f = as_grid_field(f, spec)
    if cube_family is None:
        cube_family = CandidateCubes.dyadic(f.spec)
    sides = [side for side in cube_family.sides if 1 <= side <= f.spec.nodes_per_axis]
    if not sides:
        raise EstimatorError("Empty cube family.")

    tasks = [(side, cube_family.starts(f.spec, side)) for side in sides]
    results = map_blocks(
        partial(_side_oscillation, values=np.asarray(f.values)), tasks, n_workers
    )
    best = int(np.argmax([value for value, _ in results]))
    value, corner = results[best]
    side = sides[best]
    logger.info("BMO estimated over %d cubes", cube_family.count(f.spec))

    return SeminormReport(
        SeminormKind.BMO,
        value,
        Bias.LOWER_BOUND,
        meta={
            "convention": "cubes",
            "grid": f.spec.to_dict(),
            "sides": sides,
            "budget": cube_family.budget,
            "n_cubes": cube_family.count(f.spec),
            "argmax_corner": (f.spec.axis[list(corner)] - f.spec.h / 2).tolist(),
            "argmax_side": side * f.spec.h,
        },
    )


def _holder_block(
    rows: tuple[int, int], points: Points, values: Values, eta: float
) -> tuple[float, int, int]:
    start, stop = rows
    dist = points_dist(points[start:stop], points)
    diff = np.abs(values[start:stop, np.newaxis] - values[np.newaxis, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0, diff / dist**eta, 0.0)
    i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    return float(ratio[i, j]), int(start + i), int(j)


def holder_seminorm(
    f: Field,
    eta: float,
    spec: GridSpec | None = None,
    n_workers: int = 1,
) -> SeminormReport:
    """Estimate the homogeneous Hölder seminorm by brute force over all node pairs."""
    f = as_grid_field(f, spec)
    if f.spec.size < 2:
        raise EstimatorError("Hölder seminorm needs at least two grid nodes.")
    if not 0 < eta < 1:
        raise EstimatorError(f"Hölder exponent has to be in (0, 1), got {eta}.")

    points = f.spec.points
    block = max(PAIR_BLOCK_ELEMENTS // f.spec.size, 1)
    results = map_blocks(
        partial(_holder_block, points=points, values=f.flat, eta=eta),
        block_ranges(f.spec.size, block),
        n_workers,
    )
    best = int(np.argmax([value for value, _, _ in results]))
    value, i, j = results[best]

    return SeminormReport(
        SeminormKind.HOLDER,
        value,
        Bias.LOWER_BOUND,
        params={"eta": eta},
        meta={
            "grid": f.spec.to_dict(),
            "n_pairs": f.spec.size * (f.spec.size - 1),
            "argmax_pair": [points[i].tolist(), points[j].tolist()],
        },
    )


def split_order(s: float) -> tuple[int, float]:
    """Split a smoothness order into its integer part k and the remainder s1."""
    if abs(s - round(s)) < INTEGER_ORDER_TOLERANCE:
        return int(round(s)), 0.0
    k = math.floor(s)
    return k, s - k


def _gagliardo_block(
    rows: tuple[int, int],
    points: Points,
    values: Values,
    p: float,
    beta: float,
    exclusion: float,
    weights: np.ndarray | None = None,
) -> float | np.ndarray:
    start, stop = rows
    dist = points_dist(points[start:stop], points)
    mask = dist >= exclusion * (1 - 1e-12)
    diff = np.abs(values[start:stop, np.newaxis] - values[np.newaxis, :]) ** p
    kernel = np.where(mask, diff / np.where(mask, dist, 1.0) ** beta, 0.0)
    if weights is None:
        return float(kernel.sum())
    # per set sums of w_il w_jl K_ij
    return ((kernel @ weights) * weights[start:stop]).sum(axis=0)


def gagliardo_power(
    g: GridField,
    s1: float,
    p: float,
    exclusion: float | None = None,
    exterior: bool = True,
    n_workers: int = 1,
) -> tuple[float, float | None]:
    """Return the p-th power of the Gagliardo seminorm of order s1 in (0, 1).

    The double integral is the sum over node pairs at distance at least `exclusion`
    times the squared cell volume. When `g` is constant on the boundary of the grid
    box it is extended by that constant, and pairs with one point outside the box
    are integrated against the exact exterior kernel mass. Otherwise the exterior is
    left out.

    Returns
    -------
    total
        Interior plus exterior part.
    exterior_part
        None when the exterior was left out.
    """
    spec = g.spec
    exclusion = spec.h if exclusion is None else exclusion
    beta = spec.n + s1 * p
    block = max(PAIR_BLOCK_ELEMENTS // spec.size, 1)
    partials = map_blocks(
        partial(
            _gagliardo_block,
            points=spec.points,
            values=g.flat,
            p=p,
            beta=beta,
            exclusion=exclusion,
        ),
        block_ranges(spec.size, block),
        n_workers,
    )
    interior = pairwise_sum(partials) * spec.h ** (2 * spec.n)

    outside = g.boundary_constant() if exterior else None
    if outside is None:
        return interior, None
    mass = exterior_kernel_mass(spec.points, spec.L + spec.h / 2, s1 * p)
    deviation = np.abs(g.flat - outside) ** p
    exterior_part = 2 * spec.h**spec.n * pairwise_sum(deviation * mass)
    return interior + exterior_part, exterior_part


def localized_gagliardo_powers(
    g: GridField,
    s1: float,
    p: float,
    membership: np.ndarray,
    exclusion: float | None = None,
) -> np.ndarray[float]:
    """Restrict the Gagliardo double sum to E x E for several sets E at once.

    Parameters
    ----------
    g
        Integrand.
    s1
        Order in (0, 1).
    p
        Integrability exponent.
    membership
        Array of shape (nodes, sets) with the fraction of every cell lying in every
        set.
    exclusion
        Diagonal exclusion radius, `h` by default.

    Returns
    -------
    powers
        Sum over pairs of membership_i membership_j |g_i - g_j|^p / |x_i - x_j|^(n+s1 p)
        times the squared cell volume, one value per set.
    """
    spec = g.spec
    exclusion = spec.h if exclusion is None else exclusion
    block = max(PAIR_BLOCK_ELEMENTS // spec.size, 1)
    partials = [
        _gagliardo_block(
            rows,
            spec.points,
            g.flat,
            p,
            spec.n + s1 * p,
            exclusion,
            membership,
        )
        for rows in block_ranges(spec.size, block)
    ]
    return np.sum(partials, axis=0) * spec.h ** (2 * spec.n)


def sobolev_seminorm(
    f: Field,
    s: float,
    p: float,
    exclusion: float | None = None,
    spec: GridSpec | None = None,
    exterior: bool = True,
    n_workers: int = 1,
) -> SeminormReport:
    """Estimate the homogeneous Sobolev seminorm of order `s` and exponent `p`.

    For non-integer `s` the Gagliardo seminorm of order s - [s] is applied to every
    derivative of order [s] and the results are added. For integer `s` the L^p norms
    of the derivatives of order `s` are added.

    Parameters
    ----------
    f
        Grid field, or analytic field together with `spec`.
    s
        Positive smoothness order.
    p
        Integrability exponent, at least 1.
    exclusion
        Pairs closer than this are left out of the double sum, `h` by default.
    spec
        Grid used to sample analytic fields.
    exterior
        Add the contribution of pairs with one point outside the grid box. Only
        applied to derivatives that are constant on the box boundary.
    n_workers
        Number of worker processes.

    Returns
    -------
    report
    """
    if s <= 0:
        raise EstimatorError(f"Sobolev order has to be positive, got {s}.")
    if p < 1:
        raise EstimatorError(f"Sobolev exponent has to be at least 1, got {p}.")
    f = as_grid_field(f, spec)
    exclusion = f.spec.h if exclusion is None else exclusion
    if exclusion < f.spec.h * (1 - 1e-12):
        raise EstimatorError(
            f"Exclusion radius {exclusion} is smaller than the grid spacing."
        )

    k, s1 = split_order(s)
    pieces = []
    exterior_parts = []
    for derivative in derivative_grids(f, k):
        g = derivative.field
        if s1 == 0:
            power = pairwise_sum(np.abs(g.flat) ** p) * g.spec.h**g.n
            exterior_part = None
        else:
            power, exterior_part = gagliardo_power(
                g, s1, p, exclusion, exterior, n_workers
            )
        pieces.append(power ** (1 / p))
        exterior_parts.append(exterior_part)

    return SeminormReport(
        SeminormKind.SOBOLEV,
        float(sum(pieces)),
        Bias.QUADRATURE_APPROX,
        params={"s": s, "p": p},
        meta={
            "grid": f.spec.to_dict(),
            "k": k,
            "s1": s1,
            "exclusion": exclusion,
            "exterior": any(part is not None for part in exterior_parts),
            "exterior_parts": exterior_parts,
            "pieces": pieces,
        },
    )


def default_z_candidates(f: GridField, margin: float = 2.0) -> Points:
    """Return grid-aligned points covering the enlarged support bounding box."""
    spec = f.spec
    support = spec.points[f.flat != 0]
    if len(support) == 0:
        return np.zeros((1, spec.n))

    lower = support.min(axis=0) - margin
    upper = support.max(axis=0) + margin
    per_axis = Z_CANDIDATES_PER_AXIS[spec.n]
    step = spec.h * max(math.ceil((upper - lower).max() / (spec.h * per_axis)), 1)
    axes = [np.arange(lo, up + step / 2, step) for lo, up in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _weighted_block(
    rows: tuple[int, int],
    z: Points,
    support: Points,
    magnitudes: Values,
    alpha: float,
) -> np.ndarray[float]:
    start, stop = rows
    dist = points_dist(z[start:stop], support)
    return (magnitudes[np.newaxis, :] / (dist + 1) ** alpha).sum(axis=1)


def weighted_integral_at(f: GridField, z: Point, alpha: float) -> float:
    """Return the quadrature of the integral of |f(y)| / (|z - y| + 1)^alpha."""
    spec = f.spec
    nonzero = f.flat != 0
    z = np.atleast_2d(np.asarray(z, dtype=float))
    values = _weighted_block(
        (0, 1), z, spec.points[nonzero], np.abs(f.flat[nonzero]), alpha
    )
    return float(values[0] * spec.h**spec.n)


def weighted_sup_integral(
    f: Field,
    alpha: float,
    z_candidates: Points | Sequence[Sequence[float]] | None = None,
    spec: GridSpec | None = None,
    n_workers: int = 1,
) -> SeminormReport:
    """Estimate sup_z of the integral of |f(y)| / (|z - y| + 1)^alpha.

    Parameters
    ----------
    f
        Grid field, or analytic field together with `spec`. It is taken as zero
        outside the grid box.
    alpha
        Positive decay exponent.
    z_candidates
        Points where the integral is evaluated, by default a grid over the support
        bounding box enlarged by 2 units.
    spec
        Grid used to sample analytic fields.
    n_workers
        Number of worker processes.

    Returns
    -------
    report
        The value is a lower bound in z and a quadrature in y.
    """
    if alpha <= 0:
        raise EstimatorError(f"Decay exponent has to be positive, got {alpha}.")
    f = as_grid_field(f, spec)
    if z_candidates is None:
        z = default_z_candidates(f)
    else:
        z = np.asarray(z_candidates, dtype=float).reshape(-1, f.n)
    if len(z) == 0:
        raise EstimatorError("Empty set of z candidates.")

    nonzero = f.flat != 0
    support = f.spec.points[nonzero]
    magnitudes = np.abs(f.flat[nonzero])
    cell_volume = f.spec.h**f.n
    l1_norm = pairwise_sum(magnitudes) * cell_volume

    if len(support) == 0:
        values = np.zeros(len(z))
    else:
        block = max(PAIR_BLOCK_ELEMENTS // len(support), 1)
        values = np.concatenate(
            map_blocks(
                partial(
                    _weighted_block,
                    z=z,
                    support=support,
                    magnitudes=magnitudes,
                    alpha=alpha,
                ),
                block_ranges(len(z), block),
                n_workers,
            )
        )
        values = values * cell_volume
    best = int(np.argmax(values))
    value = float(values[best])

    return SeminormReport(
        SeminormKind.WEIGHTED_SUP,
        value,
        Bias.LOWER_BOUND,
        params={"alpha": alpha},
        meta={
            "grid": f.spec.to_dict(),
            "y_bias": Bias.QUADRATURE_APPROX.value,
            "n_candidates": len(z),
            "argmax_z": z[best].tolist(),
            "l1_norm": l1_norm,
            "bounded_by_l1": value <= l1_norm * (1 + 1e-12),
        },
    )


def _averaged_field(f: Field, spec: GridSpec | None) -> Field:
    if isinstance(f, Polynomial) and f.n == 1:
        return f
    return as_grid_field(f, spec)


def annulus_average(
    f: Field,
    j: int,
    center: Point | float | None = None,
    extend_by_zero: bool = False,
    spec: GridSpec | None = None,
) -> Real:
    """Return the average of `f` over the annulus 2^j <= |x - center| < 2^(j+1).

    1D polynomials are averaged exactly and return a Fraction.
    """
    return region_average(
        _averaged_field(f, spec), dyadic_annulus(j, center), extend_by_zero
    )


def ball_average(
    f: Field,
    rho: float,
    center: Point | float | None = None,
    extend_by_zero: bool = False,
    spec: GridSpec | None = None,
) -> Real:
    """Return the average of `f` over the ball |x - center| < rho."""
    if rho <= 0:
        raise EstimatorError(f"Ball radius has to be positive, got {rho}.")
    return region_average(_averaged_field(f, spec), Ball(rho, center), extend_by_zero)
