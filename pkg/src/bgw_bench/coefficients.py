"""Exact dyadic coefficient systems and the telescoping identity built on them.

For an order `k` the coefficients a_0 = 1, a_1, ..., a_{k+1} are the unique solution
of sum_j a_j 2^(j l) = 0 for l = 0, ..., k. Everything here is computed with
`fractions.Fraction`, no floating point is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from bgw_bench.errors import DomainError, SequenceIndexError
from bgw_bench.types import Rational


def _fraction_to_str(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(value: str | int | Fraction) -> Fraction:
    """Parse an exact rational written as "p/q" or an integer."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class DyadicCoefficients:
    """Solution of the dyadic Vandermonde system of order `k`.

    Attributes
    ----------
    k
        Order of the system.
    a
        Coefficients a_0, ..., a_{k+1}, a_0 is always 1.
    a_combined
        The combination sum_{j=0}^{k} (k - j + 1) a_j, never zero.
    """

    k: int
    a: tuple[Rational, ...]
    a_combined: Rational

    def residuals(self) -> list[Rational]:
        """Return sum_j a_j 2^(j l) for l = 0, ..., k."""
        return [
            sum(a_j * 2 ** (j * l) for j, a_j in enumerate(self.a))
            for l in range(self.k + 1)
        ]

    def derivative_at_one(self) -> Rational:
        """Return Q'(1) = sum_j j a_j of the polynomial Q(x) = sum_j a_j x^j."""
        return sum((j * a_j for j, a_j in enumerate(self.a)), Fraction(0))

    @property
    def abs_sum(self) -> Rational:
        return sum((abs(a_j) for a_j in self.a), Fraction(0))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "a": [_fraction_to_str(a_j) for a_j in self.a],
            "a_combined": _fraction_to_str(self.a_combined),
        }

    @classmethod
    def from_dict(cls, data: dict) -> DyadicCoefficients:
        return cls(
            k=int(data["k"]),
            a=tuple(parse_fraction(a_j) for a_j in data["a"]),
            a_combined=parse_fraction(data["a_combined"]),
        )

    def __str__(self) -> str:
        a_str = ", ".join(_fraction_to_str(a_j) for a_j in self.a)
        return f"a = [{a_str}], a_comb = {_fraction_to_str(self.a_combined)}"


def _combine(a: tuple[Rational, ...]) -> Rational:
    k = len(a) - 2
    return sum(((k - j + 1) * a[j] for j in range(k + 1)), Fraction(0))


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve a square full rank system by Gauss-Jordan elimination over rationals."""
    size = len(matrix)
    matrix = [row.copy() for row in matrix]
    rhs = rhs.copy()
    for col in range(size):
        pivot = next((row for row in range(col, size) if matrix[row][col] != 0), None)
        if pivot is None:
            raise DomainError("Matrix is not full rank.")
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]

        for row in range(size):
            if row == col or matrix[row][col] == 0:
                continue
            factor = matrix[row][col] / matrix[col][col]
            rhs[row] -= factor * rhs[col]
            for c in range(col, size):
                matrix[row][c] -= factor * matrix[col][c]

    return [rhs[i] / matrix[i][i] for i in range(size)]


def solve_dyadic_system(k: int) -> DyadicCoefficients:
    """Solve sum_{j=0}^{k+1} a_j 2^(j l) = 0, l = 0, ..., k, with a_0 = 1.

    Parameters
    ----------
    k
        Non-negative order of the system.

    Returns
    -------
    coefficients
    """
    if k < 0:
        raise DomainError(f"Order k has to be non-negative, got {k}.")

    # unknowns a_1, ..., a_{k+1}; a_0 = 1 moves to the right hand side
    matrix = [
        [Fraction(2 ** (j * l)) for j in range(1, k + 2)] for l in range(k + 1)
    ]
    rhs = [Fraction(-1)] * (k + 1)
    a = (Fraction(1), *_solve_exact(matrix, rhs))
    return DyadicCoefficients(k=k, a=a, a_combined=_combine(a))


def combined_coefficient_closed_form(k: int) -> Rational:
    """Return 2^(-k(k+1)/2) prod_{l=1}^{k} (2^l - 1)."""
    if k < 0:
        raise DomainError(f"Order k has to be non-negative, got {k}.")
    numerator = math.prod(2**l - 1 for l in range(1, k + 1))
    return Fraction(numerator, 2 ** (k * (k + 1) // 2))


def leading_coefficient_closed_form(k: int) -> Rational:
    """Return a_{k+1} = (-1)^(k+1) 2^(-k(k+1)/2)."""
    if k < 0:
        raise DomainError(f"Order k has to be non-negative, got {k}.")
    return Fraction((-1) ** (k + 1), 2 ** (k * (k + 1) // 2))


def coefficients_from_factorization(k: int) -> DyadicCoefficients:
    """Expand Q(x) = a_{k+1} prod_{l=0}^{k} (x - 2^l) into its coefficients.

    Independent of the elimination in `solve_dyadic_system`, used as a cross-check.
    """
    poly = [Fraction(1)]
    for l in range(k + 1):
        root = 2**l
        shifted = [Fraction(0)] + poly
        scaled = [-root * c for c in poly] + [Fraction(0)]
        poly = [s + t for s, t in zip(shifted, scaled)]

    leading = leading_coefficient_closed_form(k)
    a = tuple(leading * c for c in poly)
    return DyadicCoefficients(k=k, a=a, a_combined=_combine(a))


def _require_indices(b_seq: Mapping[int, Rational], lower: int, upper: int):
    missing = [l for l in range(lower, upper + 1) if l not in b_seq]
    if missing:
        raise SequenceIndexError(
            f"Sequence is missing indices {missing}, required range is "
            f"[{lower}, {upper}]."
        )


def _check_depth(m: int):
    if m < 1:
        raise DomainError(f"Depth m has to be at least 1, got {m}.")


def _level_sums(
    coeffs: DyadicCoefficients, b_seq: Mapping[int, Rational], m: int
) -> list[Rational]:
    """Return sum_j a_j b_{j+l} for l = -m, ..., m - 1."""
    return [
        sum((a_j * b_seq[j + l] for j, a_j in enumerate(coeffs.a)), Fraction(0))
        for l in range(-m, m)
    ]


def telescoping_combine(
    coeffs: DyadicCoefficients,
    b: Rational,
    b_seq: Mapping[int, Rational],
    m: int,
) -> tuple[Rational, Rational]:
    """Evaluate both sides of the dyadic telescoping identity.

    Parameters
    ----------
    coeffs
        Dyadic coefficients of order k.
    b
        The value being reconstructed.
    b_seq
        Mapping defined at least on indices -m, ..., k + m.
    m
        Positive depth.

    Returns
    -------
    lhs
        sum_{l=-m}^{m-1} sum_j a_j b_{j+l}
    rhs
        The regrouped form, equal to `lhs` exactly.
    """
    _check_depth(m)
    k = coeffs.k
    _require_indices(b_seq, -m, k + m)
    b = Fraction(b)

    lhs = sum(_level_sums(coeffs, b_seq, m), Fraction(0))

    tail = sum(
        (
            sum(coeffs.a[l - m + 1 :], Fraction(0)) * b_seq[l]
            for l in range(m, k + m + 1)
        ),
        Fraction(0),
    )
    head = sum(
        (
            sum(coeffs.a[: l + m + 1], Fraction(0)) * (b_seq[l] - b)
            for l in range(-m, k - m + 1)
        ),
        Fraction(0),
    )
    rhs = tail + head + coeffs.a_combined * b
    return lhs, rhs


def triangle_bound(
    coeffs: DyadicCoefficients,
    b: Rational,
    b_seq: Mapping[int, Rational],
    m: int,
) -> tuple[Rational, bool]:
    """Bound |b| by the three groups of terms of the telescoping identity.

    Returns
    -------
    bound_value
        Exact value of the bound.
    holds
        Whether |b| <= bound_value.
    """
    _check_depth(m)
    k = coeffs.k
    _require_indices(b_seq, -m, k + m)
    b = Fraction(b)

    abs_sum = coeffs.abs_sum
    near = sum((abs(b_seq[l] - b) for l in range(-m, k - m + 1)), Fraction(0))
    middle = sum((abs(s) for s in _level_sums(coeffs, b_seq, m)), Fraction(0))
    far = sum((abs(b_seq[l]) for l in range(m, k + m + 1)), Fraction(0))

    bound_value = (abs_sum * near + middle + abs_sum * far) / abs(coeffs.a_combined)
    return bound_value, abs(b) <= bound_value
