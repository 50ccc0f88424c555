from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgw_bench.coefficients import (
    DyadicCoefficients,
    coefficients_from_factorization,
    combined_coefficient_closed_form,
    leading_coefficient_closed_form,
    parse_fraction,
    solve_dyadic_system,
    telescoping_combine,
    triangle_bound,
)
from bgw_bench.errors import DomainError, SequenceIndexError

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=20)


@pytest.mark.parametrize(
    "k, expected_a, expected_combined",
    [
        (0, ["1", "-1"], "1"),
        (1, ["1", "-3/2", "1/2"], "1/2"),
        (2, ["1", "-7/4", "7/8", "-1/8"], "3/8"),
    ],
)
def test_solve_dyadic_system(k, expected_a, expected_combined):
    coeffs = solve_dyadic_system(k)
    assert coeffs.a == tuple(Fraction(a) for a in expected_a)
    assert coeffs.a_combined == Fraction(expected_combined)


@pytest.mark.parametrize(
    "k, expected",
    [
        (0, "a = [1, -1], a_comb = 1"),
        (1, "a = [1, -3/2, 1/2], a_comb = 1/2"),
    ],
)
def test_coefficients_str(k, expected):
    assert str(solve_dyadic_system(k)) == expected


@pytest.mark.parametrize("k", range(9))
def test_coefficient_invariants(k):
    coeffs = solve_dyadic_system(k)
    assert len(coeffs.a) == k + 2
    assert coeffs.a[0] == 1
    assert all(r == 0 for r in coeffs.residuals())
    assert sum(coeffs.a) == 0
    assert coeffs.a_combined != 0
    assert coeffs.a_combined == combined_coefficient_closed_form(k)
    assert coeffs.a[-1] == leading_coefficient_closed_form(k)
    assert coeffs.a_combined == -coeffs.derivative_at_one()


@pytest.mark.parametrize("k", range(9))
def test_factorization_matches_elimination(k):
    assert coefficients_from_factorization(k) == solve_dyadic_system(k)


def test_negative_order():
    with pytest.raises(DomainError):
        solve_dyadic_system(-1)
    with pytest.raises(DomainError):
        combined_coefficient_closed_form(-1)


def test_coefficients_dict():
    coeffs = solve_dyadic_system(3)
    data = coeffs.to_dict()
    assert data["a"][1] == "-15/8"
    assert DyadicCoefficients.from_dict(data) == coeffs


@pytest.mark.parametrize(
    "value, expected",
    [("3/4", Fraction(3, 4)), (" -2 ", Fraction(-2)), (5, Fraction(5))],
)
def test_parse_fraction(value, expected):
    assert parse_fraction(value) == expected


def test_telescoping_combine_example():
    coeffs = solve_dyadic_system(1)
    b_seq = {l: Fraction(l * l) for l in range(-1, 3)}
    lhs, rhs = telescoping_combine(coeffs, Fraction(3), b_seq, 1)
    assert lhs == rhs


@settings(max_examples=200, deadline=None)
@given(
    k=st.integers(0, 5),
    m=st.integers(1, 8),
    b=rationals,
    values=st.lists(rationals, min_size=22, max_size=22),
)
def test_telescoping_identity_and_triangle_bound(k, m, b, values):
    coeffs = solve_dyadic_system(k)
    b_seq = {l: values[i] for i, l in enumerate(range(-m, k + m + 1))}

    lhs, rhs = telescoping_combine(coeffs, b, b_seq, m)
    assert lhs == rhs

    bound, holds = triangle_bound(coeffs, b, b_seq, m)
    assert holds
    assert abs(b) <= bound


def test_triangle_bound_is_attained_for_constant_sequences():
    coeffs = solve_dyadic_system(2)
    b_seq = {l: Fraction(0) for l in range(-1, 4)}
    bound, holds = triangle_bound(coeffs, Fraction(0), b_seq, 1)
    assert bound == 0
    assert holds


def test_missing_index():
    coeffs = solve_dyadic_system(2)
    b_seq = {l: Fraction(1) for l in range(-1, 3)}
    with pytest.raises(SequenceIndexError):
        telescoping_combine(coeffs, Fraction(1), b_seq, 1)
    with pytest.raises(SequenceIndexError):
        triangle_bound(coeffs, Fraction(1), b_seq, 1)


def test_invalid_depth():
    coeffs = solve_dyadic_system(1)
    b_seq = {l: Fraction(1) for l in range(-2, 4)}
    with pytest.raises(DomainError):
        telescoping_combine(coeffs, Fraction(1), b_seq, 0)
