import math

import numpy as np
import pytest

from bgw_bench.utils import (
    fit_growth_exponent,
    fit_log_slope,
    is_strictly_increasing,
    log2_plus,
    log_plus,
    pairwise_sum,
    spread,
)


@pytest.mark.parametrize(
    "value, expected",
    [(0.5, 0.0), (1.0, 0.0), (math.e, 1.0), (0.0, 0.0)],
)
def test_log_plus(value, expected):
    assert log_plus(value) == pytest.approx(expected)


def test_log2_plus():
    assert log2_plus(8) == 3.0
    assert log2_plus(0.25) == 0.0


def test_pairwise_sum():
    rng = np.random.default_rng(3)
    values = rng.normal(size=1000)
    assert pairwise_sum(values) == pytest.approx(math.fsum(values), abs=1e-12)
    assert pairwise_sum(np.ones(1000)) == 1000.0
    assert pairwise_sum([]) == 0.0


def test_pairwise_sum_depends_only_on_count():
    values = np.random.default_rng(5).normal(size=513)
    assert pairwise_sum(values) == pairwise_sum(list(values))


@pytest.mark.parametrize(
    "values, expected",
    [([1.0, 2.0, 4.0], 4.0), ([3.0], 1.0), ([0.0, 1.0], math.inf)],
)
def test_spread(values, expected):
    assert spread(values) == expected


@pytest.mark.parametrize(
    "values, expected",
    [([1, 2, 3], True), ([1, 1, 2], False), ([3, 2], False), ([1], True)],
)
def test_is_strictly_increasing(values, expected):
    assert is_strictly_increasing(values) == expected


def test_fit_log_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_log_slope(x, 3 * x**2) == pytest.approx(2.0)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 1.5])
def test_fit_growth_exponent(kappa):
    x = np.arange(1.0, 11.0)
    y = 3 * x**kappa + 2
    assert fit_growth_exponent(x, y) == pytest.approx(kappa, abs=1e-3)


def test_fit_growth_exponent_needs_four_points():
    with pytest.raises(ValueError):
        fit_growth_exponent([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
