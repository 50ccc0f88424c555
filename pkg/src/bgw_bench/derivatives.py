from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from bgw_bench.errors import DomainError
from bgw_bench.fields import GridField
from bgw_bench.types import MultiIndex


@lru_cache
def central_stencil(order: int) -> tuple[np.ndarray[int], np.ndarray[float]]:
    """Return offsets and unit-spacing weights of a central difference stencil.

    The stencil has 2 * ((order + 1) // 2) + 1 points and is second order accurate.

    Parameters
    ----------
    order
        Order of the derivative.

    Returns
    -------
    offsets
        Node offsets -w, ..., w.
    weights
        Weights to be divided by h**order.
    """
    half_width = (order + 1) // 2
    offsets = np.arange(-half_width, half_width + 1)
    size = len(offsets)
    # Taylor table: sum_i w_i o_i^q / q! = [q == order]
    table = np.array(
        [offsets.astype(float) ** q / math.factorial(q) for q in range(size)]
    )
    rhs = np.zeros(size)
    rhs[order] = 1.0
    weights = np.linalg.solve(table, rhs)
    return offsets, weights


def multi_indices(n: int, k: int) -> list[MultiIndex]:
    """Return all multi-indices of length `n` and order `k` in lexicographic order."""
    return sorted(
        sigma for sigma in itertools.product(range(k + 1), repeat=n) if sum(sigma) == k
    )


def _apply_along_axis(values: np.ndarray, axis: int, order: int, h: float):
    offsets, weights = central_stencil(order)
    half_width = offsets[-1]
    size = values.shape[axis]
    result = 0
    for offset, weight in zip(offsets, weights):
        window = [slice(None)] * values.ndim
        window[axis] = slice(half_width + offset, size - half_width + offset)
        result = result + weight * values[tuple(window)]
    return result / h**order, half_width


@dataclass(frozen=True)
class DerivativeGrid:
    """Samples of the partial derivative D^sigma f of a grid field.

    The field lives on the original grid shrunk by |sigma| cells per side.
    """

    sigma: MultiIndex
    field: GridField

    @property
    def order(self) -> int:
        return sum(self.sigma)


def derivative_grid(field: GridField, sigma: MultiIndex) -> DerivativeGrid:
    """Differentiate a grid field by second order central differences.

    Parameters
    ----------
    field
        Grid field to differentiate.
    sigma
        Multi-index, one order per axis.

    Returns
    -------
    derivative
    """
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != field.n or min(sigma) < 0:
        raise DomainError(f"Invalid multi-index {sigma} for dimension {field.n}.")
    k = sum(sigma)
    if k == 0:
        return DerivativeGrid(sigma, field)

    spec = field.spec.shrunk(k)
    values = np.asarray(field.values)
    crop = []
    for axis, order in enumerate(sigma):
        used = 0
        if order > 0:
            values, used = _apply_along_axis(values, axis, order, field.spec.h)
        crop.append(slice(k - used, values.shape[axis] - (k - used)))
    return DerivativeGrid(sigma, GridField(spec, values[tuple(crop)]))


def derivative_grids(field: GridField, k: int) -> list[DerivativeGrid]:
    """Return D^sigma f for all multi-indices of order `k`."""
    return [derivative_grid(field, sigma) for sigma in multi_indices(field.n, k)]
