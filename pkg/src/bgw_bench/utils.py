import math
import warnings
from typing import Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.stats import linregress

PAIRWISE_LEAF = 128


def log_plus(value: float) -> float:
    """Return log(value) for value >= 1 and 0 otherwise."""
    if value >= 1:
        return math.log(value)
    return 0.0


def log2_plus(value: float) -> float:
    """Return log2(value) for value >= 1 and 0 otherwise."""
    if value >= 1:
        return math.log2(value)
    return 0.0


def pairwise_sum(values: Sequence[float]) -> float:
    """Sum values by recursive halving.

    The summation tree depends only on the number of values, so partial sums
    produced by any number of workers reduce to the same result.

    Parameters
    ----------
    values
        Sequence of partial sums.

    Returns
    -------
    total
    """
    count = len(values)
    if count <= PAIRWISE_LEAF:
        return float(np.sum(np.asarray(values, dtype=float)))
    middle = count // 2
    return pairwise_sum(values[:middle]) + pairwise_sum(values[middle:])


def spread(values: Sequence[float]) -> float:
    """Return max / min of positive values (inf if the minimum vanishes)."""
    values = np.asarray(values, dtype=float)
    low = values.min()
    if low <= 0:
        return math.inf
    return float(values.max() / low)


def is_strictly_increasing(values: Sequence[float]) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.all(values[1:] > values[:-1]))


def fit_log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Return the slope of the least squares line through (log x, log y)."""
    return float(linregress(np.log(x), np.log(y)).slope)


def fit_growth_exponent(x: Sequence[float], y: Sequence[float]) -> float:
    """Fit y ~ c * x**kappa + d and return the exponent kappa.

    The additive constant absorbs the bounded part of quantities that grow like a
    power of `x` only asymptotically, which a plain log-log slope mistakes for a
    change of exponent.

    Parameters
    ----------
    x
        Positive abscissae, at least four of them.
    y
        Observed values.

    Returns
    -------
    kappa
        The fitted exponent.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4:
        raise ValueError("At least four points are needed to fit a growth exponent.")

    line = linregress(x, y)

    def model(t, c, kappa, d):
        return c * t**kappa + d

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        params, _ = curve_fit(
            model,
            x,
            y,
            p0=(line.slope, 1.0, line.intercept),
            bounds=([-np.inf, 0.05, -np.inf], [np.inf, 5.0, np.inf]),
            maxfev=20000,
        )
    return float(params[1])
