import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgw_bench.coefficients import solve_dyadic_system
from bgw_bench.errors import DomainError, PreconditionError
from bgw_bench.fields import Gaussian, GridSpec, Polynomial
from bgw_bench.verification.lemmas import (
    annulus_combination_constant,
    combination_of_annulus_averages,
    corrupted,
    derivative_oscillations,
    mean_pair_difference,
    overlap_multiplicity,
    overlap_multiplicity_check,
    polynomial_annihilation_check,
    power_mean_sides,
    power_mean_step_check,
    random_smooth_trials,
    run_identity_suite,
)


@pytest.mark.parametrize("k", range(6))
def test_polynomial_annihilation(k):
    for l in range(k + 1):
        assert polynomial_annihilation_check(k, l) == 0


def test_annihilation_degree_out_of_range():
    with pytest.raises(DomainError):
        polynomial_annihilation_check(2, 3)


@pytest.mark.parametrize(
    "k, radius, expected",
    [(0, 1.0, 4), (0, 1.5, 4), (3, 0.01, 7), (5, 1000.0, 9), (2, 2.0**-20, 6)],
)
def test_overlap_multiplicity(k, radius, expected):
    assert overlap_multiplicity(k, radius) == expected


def test_overlap_multiplicity_check():
    assert overlap_multiplicity_check(2, [0.3, -5.0, 17.0]) == 6
    assert overlap_multiplicity_check(1, np.array([[0.5, 0.5], [3.0, -4.0]])) == 5
    with pytest.raises(PreconditionError):
        overlap_multiplicity_check(1, [1.0, 0.0])


def test_power_mean_sides():
    lhs, rhs = power_mean_sides([1.0, 1.0, 1.0, 1.0], 2)
    assert lhs == pytest.approx(4.0)
    assert rhs == pytest.approx(4.0)
    assert power_mean_step_check([1.0, 4.0, 9.0, 0.0], 2, 2)


@pytest.mark.parametrize(
    "c, p, error",
    [([1.0, -1.0], 2, PreconditionError), ([1.0, 1.0], 0.5, DomainError)],
)
def test_power_mean_errors(c, p, error):
    with pytest.raises(error):
        power_mean_sides(c, p)


def test_power_mean_step_wrong_length():
    with pytest.raises(DomainError):
        power_mean_step_check([1.0, 2.0, 3.0], 2, 2)


@given(
    m0=st.integers(1, 6),
    p=st.floats(1.0, 8.0),
    data=st.data(),
)
def test_power_mean_step_holds(m0, p, data):
    c = data.draw(
        st.lists(
            st.floats(0.0, 1e6, allow_nan=False),
            min_size=2 * m0,
            max_size=2 * m0,
        )
    )
    assert power_mean_step_check(c, p, m0)


@pytest.mark.parametrize(
    "values, weights, outside_weight, expected",
    [
        ([0.0, 1.0], [1.0, 1.0], 0.0, 0.5),
        ([1.0], [1.0], 1.0, 0.5),
        ([[0.0, 0.0], [3.0, 4.0]], [1.0, 1.0], 0.0, 2.5),
        ([2.0, 2.0], [1.0, 3.0], 0.0, 0.0),
        ([1.0], [0.0], 0.0, 0.0),
    ],
)
def test_mean_pair_difference(values, weights, outside_weight, expected):
    value = mean_pair_difference(np.array(values), np.array(weights), outside_weight)
    assert value == pytest.approx(expected)


def test_mean_pair_difference_matches_brute_force():
    rng = np.random.default_rng(11)
    values = rng.normal(size=50)
    weights = rng.uniform(size=50)
    brute = (
        weights @ np.abs(values[:, np.newaxis] - values[np.newaxis, :]) @ weights
    ) / weights.sum() ** 2
    assert mean_pair_difference(values, weights) == pytest.approx(brute)
    as_vectors = mean_pair_difference(values[:, np.newaxis], weights)
    assert as_vectors == pytest.approx(brute)


def test_combination_of_annulus_averages_of_square():
    coeffs = solve_dyadic_system(1)
    square = Polynomial([0, 0, 1])
    # averages of x^2 over the annuli j are 7 4^j / 3
    assert combination_of_annulus_averages(square, coeffs, 0) == pytest.approx(7.0)
    assert combination_of_annulus_averages(square, coeffs, 1) == pytest.approx(28.0)


def test_derivative_oscillations_need_covering_grid():
    with pytest.raises(DomainError):
        derivative_oscillations(
            Polynomial([0, 0, 1]), 1, 0, spec=GridSpec(1, 4.0, 0.25)
        )


def test_annulus_combination_constant():
    trials = [Polynomial([0, 0, 1]), Polynomial([0, 1])]
    estimate = annulus_combination_constant(
        1, trials, levels=(0,), spec=GridSpec(1, 20.0, 1 / 16)
    )
    assert len(estimate.ratios) == 1
    assert estimate.ratios[0]["trial"] == 0
    assert estimate.ratios[0]["numerator"] == pytest.approx(7.0)
    assert estimate.constant > 0
    assert estimate.constant_l1 > 0
    assert [s["trial"] for s in estimate.skipped] == [1]
    assert estimate.to_dict()["levels"] == [0]


def test_annulus_combination_constant_of_gaussians():
    trials = random_smooth_trials(4, 3, 1)[::2]
    estimate = annulus_combination_constant(
        1, trials, levels=(-1, 0), spec=GridSpec(1, 40.0, 1 / 16)
    )
    assert len(estimate.ratios) == 4
    assert all(np.isfinite(r["ratio"]) for r in estimate.ratios)


def test_random_smooth_trials():
    trials = random_smooth_trials(3, 6, 2)
    assert [type(t) for t in trials] == [Gaussian, Polynomial] * 3
    assert all(t.degree >= 3 for t in trials[1::2])
    again = random_smooth_trials(3, 6, 2)
    assert [t.to_dict() for t in again] == [t.to_dict() for t in trials]


def test_random_smooth_trials_2d():
    trials = random_smooth_trials(0, 2, 1, dimension=2)
    assert all(t.n == 2 for t in trials)


def test_identity_suite():
    result = run_identity_suite(200, 7)
    assert result.passed
    assert result.summary().startswith("200/200 pass")
    assert result.annihilation_total == sum(k + 1 for k in range(6))
    assert result.to_dict()["failures"] == []


def test_identity_suite_detects_corruption():
    result = run_identity_suite(50, 7, corrupt=True)
    assert not result.passed
    assert result.failures
    assert result.annihilation_passed < result.annihilation_total


def test_corrupted():
    coeffs = solve_dyadic_system(2)
    assert corrupted(coeffs).a[1] != coeffs.a[1]
    assert corrupted(coeffs).a[0] == coeffs.a[0]


def test_identity_suite_needs_trials():
    with pytest.raises(DomainError):
        run_identity_suite(0, 1)
