"""Step by step replays of the dyadic decompositions bounding |f(x0)|.

The ball chain splits f(x0) into its deviation from the average over the smallest
ball, the differences of averages over consecutive dyadic balls and the average
over the largest ball. The annulus chain combines averages over dyadic annuli with
the dyadic coefficients of order k.

Grid fields are taken as zero outside their box. Averages A_j are normalized by the
exact measure of the region, proof-form terms by the quadrature measure, so the
telescoping residual measures the quadrature error of the region measures.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from bgw_bench.coefficients import (
    DyadicCoefficients,
    telescoping_combine,
    triangle_bound,
)
from bgw_bench.derivatives import derivative_grids
from bgw_bench.errors import PreconditionError
from bgw_bench.fields import (
    Field,
    GridField,
    GridSpec,
    Polynomial,
    as_grid_field,
    evaluate,
    region_average,
)
from bgw_bench.seminorms import (
    gagliardo_power,
    localized_gagliardo_powers,
    weighted_integral_at,
)
from bgw_bench.types import Point, Real
from bgw_bench.utils import log2_plus
from bgw_bench.verification.lemmas import (
    derivative_oscillations,
    power_mean_sides,
    power_mean_step_check,
)
from geometry import Region, dyadic_annulus, dyadic_ball, enlarged_annulus

logger = logging.getLogger(__name__)

STEP_TOLERANCE = 1e-9


def m0_rule(log_arg: float, n: int, alpha: float, eta: float) -> int:
    """Return the dyadic depth floor(log2+(log_arg) / min(n - alpha, eta)) + 1."""
    if alpha >= n:
        raise PreconditionError(f"alpha has to be smaller than n = {n}, got {alpha}.")
    if not 0 < eta < 1:
        raise PreconditionError(f"eta has to be in (0, 1), got {eta}.")
    rate = min(n - alpha, eta)
    return math.floor(log2_plus(log_arg) / rate) + 1


def _chain_field(f: Field, spec: GridSpec | None) -> Field:
    if isinstance(f, Polynomial) and f.n == 1:
        return f
    return as_grid_field(f, spec)


def _center(f: Field, center: Point | float | None) -> np.ndarray:
    if center is None:
        return np.zeros(f.n)
    return np.broadcast_to(np.asarray(center, dtype=float), (f.n,))


def _value_at(f: Field, center: np.ndarray) -> Real:
    if isinstance(f, Polynomial) and f.n == 1:
        return f.exact_value(center[0])
    return evaluate(f, center)


def _measure_ratio(f: Field, region: Region) -> Real:
    """Return quadrature measure / exact measure, exactly 1 on the exact path."""
    if isinstance(f, GridField):
        return f.spec.region_measure(region) / region.measure(f.n)
    return Fraction(1)


@dataclass
class TelescopingReplay:
    """Terms of f(x0) = head + sum of steps + tail over balls of radius 2^j."""

    m0: int
    value: Real
    averages: dict[int, Real]
    measure_ratios: dict[int, Real]
    head: Real
    steps: list[Real]
    tail: Real
    residual: Real

    def to_dict(self) -> dict:
        return {
            "m0": self.m0,
            "value": float(self.value),
            "averages": {str(j): float(a) for j, a in self.averages.items()},
            "measure_ratios": {
                str(j): float(r) for j, r in self.measure_ratios.items()
            },
            "head": float(self.head),
            "steps": [float(s) for s in self.steps],
            "tail": float(self.tail),
            "residual": float(self.residual),
        }


def ball_telescoping_replay(
    f: Field,
    m0: int,
    center: Point | float | None = None,
    spec: GridSpec | None = None,
) -> TelescopingReplay:
    """Decompose f(x0) over the balls of radius 2^j, j = -m0, ..., m0.

    Parameters
    ----------
    f
        Grid field, analytic field with `spec`, or a 1D polynomial (exact path).
    m0
        Positive depth.
    center
        The point x0, the origin by default.
    spec
        Grid used to sample analytic fields.

    Returns
    -------
    replay
    """
    if m0 < 1:
        raise PreconditionError(f"m0 has to be positive, got {m0}.")
    f = _chain_field(f, spec)
    center = _center(f, center)
    value = _value_at(f, center)

    averages = {}
    ratios = {}
    for j in range(-m0, m0 + 1):
        ball = dyadic_ball(j, center)
        averages[j] = region_average(f, ball, extend_by_zero=True)
        ratios[j] = _measure_ratio(f, ball)

    head = value * ratios[-m0] - averages[-m0]
    steps = [averages[j] - averages[j + 1] * ratios[j] for j in range(-m0, m0)]
    tail = averages[m0]
    reconstructed = head + sum(steps) + tail
    return TelescopingReplay(
        m0, value, averages, ratios, head, steps, tail, abs(value - reconstructed)
    )


def ball_telescoping_check(
    f: Field,
    m0: int,
    center: Point | float | None = None,
    spec: GridSpec | None = None,
) -> Real:
    """Return |f(x0) - (head + steps + tail)| of the ball decomposition.

    The identity is exact, the residual is 0 on the exact polynomial path and the
    quadrature error of the ball measures otherwise.
    """
    return ball_telescoping_replay(f, m0, center, spec).residual


@dataclass
class StepBound:
    j: int
    step_value: float
    bound: float
    tolerance: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _weights_and_values(f: GridField, region: Region):
    indices, weights = f.spec.weights(region)
    outside = max(f.spec.region_measure(region) - weights.sum(), 0.0)
    return indices, weights, outside


def _mean_deviation(
    f: GridField, region: Region, constant: float, normalization: float
) -> float:
    """Return the integral of |f - constant| over the region, f = 0 off the grid."""
    indices, weights, outside = _weights_and_values(f, region)
    deviation = weights @ np.abs(f.flat[indices] - constant) + abs(constant) * outside
    return float(deviation / normalization)


def bmo_step_bounds(
    f: Field,
    m0: int,
    center: Point | float | None = None,
    spec: GridSpec | None = None,
    tolerance: float = STEP_TOLERANCE,
) -> list[StepBound]:
    """Bound every step |A_j - A_{j+1}| by the mean oscillation on the larger ball.

    For j = -m0, ..., m0 - 1 the bound is 2^n times the average of
    |f - A_{j+1}| over the ball of radius 2^(j+1).

    Parameters
    ----------
    f
        Grid field or analytic field with `spec`.
    m0
        Positive depth.
    center
        The point x0, the origin by default.
    spec
        Grid used to sample analytic fields.
    tolerance
        Relative tolerance of the comparison, the quadrature error of the ball
        measure is added to it.

    Returns
    -------
    bounds
    """
    if m0 < 1:
        raise PreconditionError(f"m0 has to be positive, got {m0}.")
    f = as_grid_field(f, spec)
    center = _center(f, center)

    balls = {j: dyadic_ball(j, center) for j in range(-m0, m0 + 1)}
    averages = {
        j: float(region_average(f, ball, extend_by_zero=True))
        for j, ball in balls.items()
    }

    bounds = []
    for j in range(-m0, m0):
        constant = averages[j + 1]
        larger = balls[j + 1]
        bound = 2**f.n * _mean_deviation(f, larger, constant, larger.measure(f.n))
        step_value = abs(averages[j] - constant)
        ratio = float(_measure_ratio(f, balls[j]))
        tol = tolerance * max(1.0, abs(constant), bound) + abs(constant) * abs(
            ratio - 1
        )
        bounds.append(StepBound(j, step_value, bound, tol, step_value <= bound + tol))

    failed = [b.j for b in bounds if not b.holds]
    if failed:
        logger.warning("BMO step bounds failed at levels %s", failed)
    return bounds


def _quadrature_average(f: GridField, region: Region) -> tuple[float, float]:
    """Return the average normalized by the quadrature measure, and that measure."""
    indices, weights, outside = _weights_and_values(f, region)
    measure = weights.sum() + outside
    return float(weights @ f.flat[indices] / measure), measure


def ball_chain(
    f: GridField,
    m0: int,
    center: Point,
    holder: float,
    eta: float,
    bmo: float,
    alpha: float,
) -> dict:
    """Replay the ball decomposition bound of |f(x0)| with proof-form terms.

    The head, middle and tail terms use averages A'_j normalized by the quadrature
    measure, for which head + middle + tail >= |f(x0)| holds exactly. Each term is
    compared with its discrete bound (which holds exactly on the grid) and with the
    closed form bound of the proof.
    """
    n = f.n
    h = f.spec.h
    center = np.asarray(center, dtype=float)
    value = evaluate(f, center)
    points = f.spec.points

    averages = {}
    measures = {}
    for j in range(-m0, m0 + 1):
        averages[j], measures[j] = _quadrature_average(f, dyadic_ball(j, center))

    smallest = dyadic_ball(-m0, center)
    indices, weights, outside = _weights_and_values(f, smallest)
    head = _mean_deviation(f, smallest, value, measures[-m0])
    dist = np.linalg.norm(points[indices] - center, axis=1)
    head_bound = (
        holder * float(weights @ dist**eta) + abs(value) * outside
    ) / measures[-m0]
    head_closed_bound = holder * n * 2.0 ** (-m0 * eta) / (n + eta)

    middle_terms = [
        _mean_deviation(f, dyadic_ball(j, center), averages[j + 1], measures[j])
        for j in range(-m0, m0)
    ]
    middle = sum(middle_terms)
    middle_closed_bound = 2 * m0 * 2**n * bmo

    largest = dyadic_ball(m0, center)
    tail = abs(averages[m0])
    k_alpha_at_center = weighted_integral_at(f, center, alpha)
    tail_bound = (
        (2.0**m0 + 1 + h * math.sqrt(n)) ** alpha / measures[m0] * k_alpha_at_center
    )
    tail_closed_bound = (2.0**m0 + 1) ** alpha / largest.measure(n) * k_alpha_at_center

    total = head + middle + tail
    closed_bound = head_closed_bound + middle_closed_bound + tail_closed_bound
    tol = STEP_TOLERANCE * max(1.0, abs(value))
    return {
        "center": center.tolist(),
        "value": value,
        "head": head,
        "head_bound": head_bound,
        "head_holds": head <= head_bound + tol,
        "head_closed_bound": head_closed_bound,
        "middle_terms": middle_terms,
        "middle": middle,
        "middle_closed_bound": middle_closed_bound,
        "middle_ratio": (
            middle / middle_closed_bound if middle_closed_bound > 0 else None
        ),
        "tail": tail,
        "tail_bound": tail_bound,
        "tail_holds": tail <= tail_bound + tol,
        "tail_closed_bound": tail_closed_bound,
        "k_alpha_at_center": k_alpha_at_center,
        "total": total,
        "reconstruction_holds": abs(value) <= total + tol,
        "closed_bound": closed_bound,
        "closed_bound_ratio": abs(value) / closed_bound if closed_bound > 0 else None,
    }


def _level_membership(spec: GridSpec, regions: list[Region]) -> np.ndarray:
    """Return the covered fraction of every cell in every region."""
    membership = np.zeros((spec.size, len(regions)))
    for column, region in enumerate(regions):
        indices, weights = spec.weights(region)
        membership[indices, column] = weights / spec.h**spec.n
    return membership


def _exact(value: float) -> Fraction:
    return Fraction(float(value))


def annulus_chain(
    f: GridField,
    coeffs: DyadicCoefficients,
    m0: int,
    center: Point,
    s1: float,
    p: float,
    eta: float,
    alpha: float,
    holder: float,
    core: float,
    log_arg: float,
    exclusion: float | None = None,
) -> dict:
    """Replay the annulus decomposition bound of |f(x0)| for the Sobolev inequality.

    Parameters
    ----------
    f
        Grid field.
    coeffs
        Dyadic coefficients of order k = [s].
    m0
        Dyadic depth.
    center
        The point x0.
    s1
        Fractional part of the smoothness order, 0 for integer orders.
    p
        Integrability exponent.
    eta
        Hölder exponent.
    alpha
        Decay exponent of the weighted integral.
    holder
        Hölder seminorm of `f`.
    core
        Sobolev seminorm of `f`.
    log_arg
        Argument of the logarithm, K_alpha(f) + Hölder seminorm.
    exclusion
        Diagonal exclusion radius of the localized Gagliardo sums.

    Returns
    -------
    chain
        Measured terms, their bounds and the checks performed on them.
    """
    k = coeffs.k
    n = f.n
    center = np.asarray(center, dtype=float)
    value = evaluate(f, center)

    levels = range(-m0, k + m0 + 1)
    annuli = {l: dyadic_annulus(l, center) for l in levels}
    averages = {
        l: float(region_average(f, annulus, extend_by_zero=True))
        for l, annulus in annuli.items()
    }

    # the coefficient identity replayed exactly on the measured averages
    b = _exact(value)
    b_seq = {l: _exact(a) for l, a in averages.items()}
    lhs, rhs = telescoping_combine(coeffs, b, b_seq, m0)
    triangle_value, triangle_holds = triangle_bound(coeffs, b, b_seq, m0)

    near_levels = range(-m0, k - m0 + 1)
    near = sum(abs(averages[l] - value) for l in near_levels)
    near_closed_bound = holder * sum(2.0 ** ((l + 1) * eta) for l in near_levels)
    near_bound = 0.0
    points = f.spec.points
    for l in near_levels:
        indices, weights = f.spec.weights(annuli[l])
        measure = annuli[l].measure(n)
        dist = np.linalg.norm(points[indices] - center, axis=1)
        near_bound += holder * float(weights @ dist**eta) / measure
        near_bound += abs(value) * abs(weights.sum() / measure - 1)

    level_sums = [
        float(sum(a_j * averages[j + l] for j, a_j in enumerate(coeffs.a)))
        for l in range(-m0, m0)
    ]
    middle = sum(abs(s) for s in level_sums)

    far = sum(abs(averages[l]) for l in range(m0, k + m0 + 1))
    k_alpha_at_center = weighted_integral_at(f, center, alpha)
    far_scale = 2.0 ** (-m0 * (n - alpha)) * k_alpha_at_center

    derivatives = derivative_grids(f, k)
    dspec = derivatives[0].field.spec
    middle_levels = list(range(-m0, m0))
    regions = [enlarged_annulus(k, l, center) for l in middle_levels]
    membership = _level_membership(dspec, regions)

    lemma_terms = []
    for l in middle_levels:
        oscillation, magnitude = derivative_oscillations(
            f, k, l, center, derivatives=derivatives
        )
        lemma_terms.append(oscillation if s1 > 0 else magnitude)

    if s1 > 0:
        level_powers = [
            localized_gagliardo_powers(d.field, s1, p, membership, exclusion)
            for d in derivatives
        ]
        full_powers = [
            gagliardo_power(d.field, s1, p, exclusion, exterior=False)[0]
            for d in derivatives
        ]
    else:
        level_powers = [
            (np.abs(d.field.flat[:, np.newaxis]) ** p * membership).sum(axis=0)
            * dspec.h**n
            for d in derivatives
        ]
        full_powers = [
            float(np.sum(np.abs(d.field.flat) ** p)) * dspec.h**n for d in derivatives
        ]

    localized = np.sum([powers ** (1 / p) for powers in level_powers], axis=0)
    overlap_holds = all(
        powers.sum() <= (k + 4) * full * (1 + STEP_TOLERANCE)
        for powers, full in zip(level_powers, full_powers)
    )
    power_mean_lhs, power_mean_rhs = power_mean_sides(localized**p, p)
    power_mean_holds = power_mean_step_check(localized**p, p, m0)

    lemma_ratios = [
        abs(level) / term if term > 0 else None
        for level, term in zip(level_sums, lemma_terms)
    ]
    localized_ratios = [
        term / piece if piece > 0 else None
        for term, piece in zip(lemma_terms, localized)
    ]

    exponent = (p - 1) / p
    middle_bound = m0**exponent * core
    final_bound = (
        2.0 ** (-m0 * min(n - alpha, eta)) * log_arg + m0**exponent * core
    )

    return {
        "center": center.tolist(),
        "value": value,
        "k": k,
        "s1": s1,
        "averages": {str(l): a for l, a in averages.items()},
        "identity_lhs": str(lhs),
        "identity_rhs": str(rhs),
        "identity_exact": lhs == rhs,
        "triangle_bound": float(triangle_value),
        "triangle_holds": triangle_holds,
        "near": near,
        "near_bound": near_bound,
        "near_holds": near <= near_bound * (1 + STEP_TOLERANCE) + STEP_TOLERANCE,
        "near_closed_bound": near_closed_bound,
        "level_sums": level_sums,
        "middle": middle,
        "lemma_terms": lemma_terms,
        "lemma_ratios": lemma_ratios,
        "lemma_constant": max((r for r in lemma_ratios if r is not None), default=0.0),
        "localized": localized.tolist(),
        "localized_ratios": localized_ratios,
        "overlap_holds": overlap_holds,
        "power_mean_lhs": power_mean_lhs,
        "power_mean_rhs": power_mean_rhs,
        "power_mean_holds": power_mean_holds,
        "middle_bound": middle_bound,
        "middle_ratio": middle / middle_bound if middle_bound > 0 else None,
        "far": far,
        "far_scale": far_scale,
        "far_ratio": far / far_scale if far_scale > 0 else None,
        "k_alpha_at_center": k_alpha_at_center,
        "final_bound": final_bound,
        "final_ratio": abs(value) / final_bound if final_bound > 0 else None,
    }
