"""Checks of the lemmas behind the logarithmic inequalities.

Exact checks (telescoping identity, polynomial annihilation, overlap multiplicity,
power mean step) and the empirical estimate of the constant comparing coefficient
combinations of annulus averages with oscillations of the k-th derivative.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from tqdm import tqdm

from bgw_bench.coefficients import (
    DyadicCoefficients,
    solve_dyadic_system,
    telescoping_combine,
    triangle_bound,
)
from bgw_bench.derivatives import DerivativeGrid, derivative_grids
from bgw_bench.errors import DomainError, PreconditionError
from bgw_bench.fields import Field, Gaussian, GridSpec, Polynomial, as_grid_field
from bgw_bench.seminorms import annulus_average
from bgw_bench.types import Point, Points, Rational
from geometry import dyadic_annulus, enlarged_annulus

logger = logging.getLogger(__name__)

POWER_MEAN_TOLERANCE = 1e-12
DENOMINATOR_TOLERANCE = 1e-9


def polynomial_annihilation_check(k: int, l: int) -> Rational:
    """Return sum_j a_j times the average of x^l over the annulus j, exactly.

    The coefficient combination annihilates polynomials of degree at most k, so the
    result is 0.
    """
    if not 0 <= l <= k:
        raise DomainError(f"Monomial degree has to be in [0, {k}], got {l}.")
    coeffs = solve_dyadic_system(k)
    monomial = Polynomial({l: 1})
    return sum(
        (a_j * annulus_average(monomial, j) for j, a_j in enumerate(coeffs.a)),
        Fraction(0),
    )


def overlap_multiplicity(k: int, radius: float) -> int:
    """Count the integers l with 2^(l-1) <= radius < 2^(k+l+3)."""
    if radius <= 0:
        raise PreconditionError("Overlap multiplicity is infinite at the origin.")
    _, exponent = math.frexp(radius)
    return sum(
        1
        for l in range(exponent - k - 5, exponent + 3)
        if math.ldexp(1.0, l - 1) <= radius < math.ldexp(1.0, k + l + 3)
    )


def overlap_multiplicity_check(k: int, sample_points: Points | Sequence[float]) -> int:
    """Return the maximal number of enlarged annuli containing one of the samples.

    Parameters
    ----------
    k
        Order of the coefficient system.
    sample_points
        Nonzero points, either a 1d array of radii or rows of coordinates.

    Returns
    -------
    multiplicity
        Never more than k + 4.
    """
    points = np.asarray(sample_points, dtype=float)
    radii = np.abs(points) if points.ndim == 1 else np.linalg.norm(points, axis=1)
    if np.any(radii == 0):
        raise PreconditionError("Sample points have to be nonzero.")
    return max(overlap_multiplicity(k, float(r)) for r in radii)


def power_mean_sides(c: Sequence[float], p: float) -> tuple[float, float]:
    """Return sum c_j^(1/p) and N^((p-1)/p) (sum c_j)^(1/p) for N = len(c)."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise PreconditionError("Power mean entries have to be non-negative.")
    if p < 1:
        raise DomainError(f"Exponent p has to be at least 1, got {p}.")
    lhs = float(np.sum(c ** (1 / p)))
    rhs = len(c) ** ((p - 1) / p) * float(np.sum(c)) ** (1 / p)
    return lhs, rhs


def power_mean_step_check(c: Sequence[float], p: float, m0: int) -> bool:
    """Check sum c_j^(1/p) <= (2 m0)^((p-1)/p) (sum c_j)^(1/p) for 2 m0 entries."""
    if len(c) != 2 * m0:
        raise DomainError(f"Expected {2 * m0} entries, got {len(c)}.")
    lhs, rhs = power_mean_sides(c, p)
    return lhs <= rhs * (1 + POWER_MEAN_TOLERANCE)


def mean_pair_difference(
    values: np.ndarray, weights: np.ndarray, outside_weight: float = 0.0
) -> float:
    """Return the weighted mean of |v_i - v_j| over all pairs.

    Parameters
    ----------
    values
        Array of shape (M,) or (M, components), differences of vectors are measured
        in the Euclidean norm.
    weights
        Non-negative weights of the samples.
    outside_weight
        Weight of an additional sample with value 0.

    Returns
    -------
    mean
        sum_ij w_i w_j |v_i - v_j| / (sum_i w_i)^2, including the zero sample.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 2 and values.shape[1] == 1:
        values = values[:, 0]
    if outside_weight > 0:
        zero = np.zeros((1,) + values.shape[1:])
        values = np.concatenate([values, zero])
        weights = np.append(weights, outside_weight)
    total = weights.sum()
    if total == 0:
        return 0.0

    if values.ndim == 1:
        order = np.argsort(values, kind="stable")
        v = values[order]
        w = weights[order]
        before = np.cumsum(w) - w
        after = total - before - w
        pair_sum = 2 * np.sum(w * v * (before - after))
        return float(pair_sum / total**2)

    pair_sum = 0.0
    for start in range(0, len(values), 1024):
        block = values[start : start + 1024]
        diff = block[:, np.newaxis, :] - values[np.newaxis, :, :]
        dist = np.linalg.norm(diff, axis=2)
        pair_sum += float(weights[start : start + 1024] @ dist @ weights)
    return pair_sum / total**2


@dataclass
class AnnulusCombinationEstimate:
    """Empirical lower bounds of the constants comparing annulus combinations and D^k f.

    Attributes
    ----------
    constant
        Maximal ratio against the mean oscillation of D^k f over E_l.
    constant_l1
        Maximal ratio against the mean of |D^k f| over E_l.
    ratios
        One record per evaluated trial and level.
    skipped
        Trials with a vanishing oscillation of D^k f.
    """

    k: int
    levels: tuple[int, ...]
    constant: float = 0.0
    constant_l1: float = 0.0
    ratios: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "levels": list(self.levels),
            "constant": self.constant,
            "constant_l1": self.constant_l1,
            "ratios": self.ratios,
            "skipped": self.skipped,
        }


def combination_of_annulus_averages(
    f: Field,
    coeffs: DyadicCoefficients,
    l: int,
    center: Point | None = None,
    spec: GridSpec | None = None,
) -> float:
    """Return sum_j a_j times the average of f over the annulus j + l."""
    total = sum(
        a_j * annulus_average(f, j + l, center, extend_by_zero=True, spec=spec)
        for j, a_j in enumerate(coeffs.a)
    )
    return float(total)


def derivative_oscillations(
    f: Field,
    k: int,
    l: int,
    center: Point | None = None,
    spec: GridSpec | None = None,
    derivatives: list[DerivativeGrid] | None = None,
) -> tuple[float, float]:
    """Return the mean oscillation and the mean magnitude of D^k f over E_l.

    Both are averages over the enlarged annulus E_l with D^k f taken as zero outside
    its grid, and both are multiplied by 2^(k l). Precomputed `derivatives` of the
    grid samples may be passed in.
    """
    if derivatives is None:
        derivatives = derivative_grids(as_grid_field(f, spec), k)
    dspec = derivatives[0].field.spec
    region = enlarged_annulus(k, l, center)

    if isinstance(f, Polynomial):
        lower, upper = region.bounds(dspec.n)
        if np.any(np.abs(lower) > dspec.L) or np.any(np.abs(upper) > dspec.L):
            raise DomainError(
                f"Grid {dspec} does not cover {region} needed by a polynomial trial."
            )

    indices, weights = dspec.weights(region)
    outside = max(dspec.region_measure(region) - weights.sum(), 0.0)
    values = np.stack([d.field.flat[indices] for d in derivatives], axis=1)

    oscillation = mean_pair_difference(values, weights, outside)
    magnitude = float(weights @ np.linalg.norm(values, axis=1)) / (
        weights.sum() + outside
    )
    scale = 2.0 ** (k * l)
    return scale * oscillation, scale * magnitude


def annulus_combination_constant(
    k: int,
    trial_fields: Sequence[Field],
    levels: Sequence[int] = (0,),
    spec: GridSpec | None = None,
    center: Point | None = None,
    progress: bool = False,
) -> AnnulusCombinationEstimate:
    """Estimate the constant bounding annulus combinations by oscillations of D^k f.

    For every trial and level l the ratio of |sum_j a_j avg_{annulus j+l} f| to
    2^(k l) times the mean oscillation of D^k f over E_l is computed, the returned
    constant is the maximal ratio. Trials whose D^k f does not oscillate on E_l
    (polynomials of degree <= k) are skipped and recorded.

    Parameters
    ----------
    k
        Order of the coefficient system and of the derivative.
    trial_fields
        Smooth fields, analytic fields are sampled on `spec`.
    levels
        Levels l to evaluate.
    spec
        Grid for analytic trial fields.
    center
        Center of the annuli.
    progress
        Show a progress bar.

    Returns
    -------
    estimate
    """
    coeffs = solve_dyadic_system(k)
    estimate = AnnulusCombinationEstimate(k=k, levels=tuple(levels))
    for index, f in enumerate(tqdm(trial_fields, "Lemma trials", disable=not progress)):
        derivatives = derivative_grids(as_grid_field(f, spec), k)
        for l in levels:
            numerator = abs(combination_of_annulus_averages(f, coeffs, l, center, spec))
            oscillation, magnitude = derivative_oscillations(
                f, k, l, center, spec, derivatives
            )
            if oscillation <= DENOMINATOR_TOLERANCE * max(magnitude, 1.0):
                logger.info(
                    "Skipping trial %d at level %d, D^%d f is constant", index, l, k
                )
                estimate.skipped.append(
                    {"trial": index, "level": l, "numerator": numerator}
                )
                continue

            ratio = numerator / oscillation
            ratio_l1 = numerator / magnitude
            estimate.ratios.append(
                {
                    "trial": index,
                    "level": l,
                    "numerator": numerator,
                    "oscillation": oscillation,
                    "magnitude": magnitude,
                    "ratio": ratio,
                    "ratio_l1": ratio_l1,
                }
            )
            estimate.constant = max(estimate.constant, ratio)
            estimate.constant_l1 = max(estimate.constant_l1, ratio_l1)
    return estimate


def random_smooth_trials(
    seed: int, count: int, k: int, dimension: int = 1
) -> list[Gaussian | Polynomial]:
    """Return reproducible smooth trial fields, Gaussian bumps and polynomials.

    Polynomials have degree between k + 1 and k + 3 so that D^k f is not constant.
    """
    rng = np.random.default_rng(seed)
    trials = []
    for i in range(count):
        if i % 2 == 0:
            trials.append(
                Gaussian(
                    sigma=float(rng.uniform(0.25, 2.0)),
                    amplitude=float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)),
                    center=rng.uniform(-0.5, 0.5, size=dimension).tolist(),
                    dimension=dimension,
                )
            )
        else:
            degree = int(rng.integers(k + 1, k + 4))
            if dimension == 1:
                coeffs = {e: int(rng.integers(-5, 6)) for e in range(degree)}
                coeffs[degree] = int(rng.choice([-1, 1]) * rng.integers(1, 6))
            else:
                coeffs = {
                    (e, degree - e): int(rng.integers(-5, 6)) for e in range(degree)
                }
                coeffs[(degree, 0)] = int(rng.choice([-1, 1]) * rng.integers(1, 6))
            trials.append(Polynomial(coeffs, dimension))
    return trials


def random_rational(rng: random.Random, max_numerator: int = 50) -> Fraction:
    return Fraction(rng.randint(-max_numerator, max_numerator), rng.randint(1, 20))


@dataclass
class IdentitySuiteResult:
    trials: int
    seed: int
    telescoping_passed: int = 0
    triangle_passed: int = 0
    passed_trials: int = 0
    annihilation_total: int = 0
    annihilation_passed: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.passed_trials == self.trials
            and self.annihilation_passed == self.annihilation_total
        )

    def summary(self) -> str:
        return (
            f"{self.passed_trials}/{self.trials} pass "
            f"(telescoping {self.telescoping_passed}, triangle {self.triangle_passed}, "
            f"annihilation {self.annihilation_passed}/{self.annihilation_total})"
        )

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "telescoping_passed": self.telescoping_passed,
            "triangle_passed": self.triangle_passed,
            "passed_trials": self.passed_trials,
            "annihilation_total": self.annihilation_total,
            "annihilation_passed": self.annihilation_passed,
            "failures": self.failures,
        }


def corrupted(coeffs: DyadicCoefficients) -> DyadicCoefficients:
    """Return the coefficients with a_1 perturbed, a negative control for the suite."""
    a = list(coeffs.a)
    a[1] += Fraction(1, 7)
    return DyadicCoefficients(coeffs.k, tuple(a), coeffs.a_combined)


def run_identity_suite(
    trials: int,
    seed: int,
    k_max: int = 5,
    m_max: int = 8,
    corrupt: bool = False,
    progress: bool = False,
) -> IdentitySuiteResult:
    """Check the telescoping identity and its triangle bound on random instances.

    Every trial draws k <= `k_max`, m <= `m_max`, a rational `b` and a rational
    sequence on [-m, k + m]. Afterwards the polynomial annihilation is checked for
    all k <= `k_max` and degrees l <= k.

    Parameters
    ----------
    trials
        Number of random instances.
    seed
        Seed of the instance generator.
    k_max
        Maximal order.
    m_max
        Maximal depth.
    corrupt
        Perturb the coefficients, every suite is then expected to fail.
    progress
        Show a progress bar.

    Returns
    -------
    result
    """
    if trials < 1:
        raise DomainError(f"Number of trials has to be positive, got {trials}.")
    rng = random.Random(seed)
    systems = {k: solve_dyadic_system(k) for k in range(k_max + 1)}
    if corrupt:
        systems = {k: corrupted(coeffs) for k, coeffs in systems.items()}

    result = IdentitySuiteResult(trials=trials, seed=seed)
    for trial in tqdm(range(trials), "Identity trials", disable=not progress):
        k = rng.randint(0, k_max)
        m = rng.randint(1, m_max)
        b = random_rational(rng)
        b_seq = {l: random_rational(rng) for l in range(-m, k + m + 1)}

        lhs, rhs = telescoping_combine(systems[k], b, b_seq, m)
        _, holds = triangle_bound(systems[k], b, b_seq, m)
        result.telescoping_passed += lhs == rhs
        result.triangle_passed += holds
        if lhs == rhs and holds:
            result.passed_trials += 1
        else:
            result.failures.append({"trial": trial, "k": k, "m": m})

    for k, coeffs in systems.items():
        for l in range(k + 1):
            monomial = Polynomial({l: 1})
            residual = sum(
                (a_j * annulus_average(monomial, j) for j, a_j in enumerate(coeffs.a)),
                Fraction(0),
            )
            result.annihilation_total += 1
            result.annihilation_passed += residual == 0

    if result.failures:
        logger.warning("%d identity trials failed", len(result.failures))
    return result
