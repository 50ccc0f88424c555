import math
from fractions import Fraction

import pytest

from bgw_bench.coefficients import solve_dyadic_system
from bgw_bench.errors import PreconditionError
from bgw_bench.fields import Gaussian, GridSpec, HolderCone, LogBump, Polynomial, sample
from bgw_bench.seminorms import holder_seminorm, sobolev_seminorm
from bgw_bench.verification.chain import (
    annulus_chain,
    ball_chain,
    ball_telescoping_check,
    ball_telescoping_replay,
    bmo_step_bounds,
    m0_rule,
)


@pytest.fixture
def log_bump():
    return sample(LogBump(1 / 16), GridSpec(1, 0.5, 1 / 256))


@pytest.mark.parametrize(
    "log_arg, n, alpha, eta, expected",
    [
        (0.5, 1, 0.5, 0.5, 1),
        (1.0, 1, 0.5, 0.5, 1),
        (16.0, 1, 0.5, 0.5, 9),
        (16.0, 2, 1.5, 0.25, 17),
        (16.0, 2, 1.0, 0.5, 9),
    ],
)
def test_m0_rule(log_arg, n, alpha, eta, expected):
    assert m0_rule(log_arg, n, alpha, eta) == expected


@pytest.mark.parametrize("alpha, eta", [(1.0, 0.5), (0.5, 1.0), (0.5, 0.0)])
def test_m0_rule_preconditions(alpha, eta):
    with pytest.raises(PreconditionError):
        m0_rule(2.0, 1, alpha, eta)


@pytest.mark.parametrize("m0", [1, 3, 6])
def test_ball_telescoping_of_polynomial_is_exact(m0):
    f = Polynomial({0: 1, 2: Fraction(1, 3)})
    replay = ball_telescoping_replay(f, m0, center=Fraction(1, 2))
    assert replay.residual == 0
    assert len(replay.steps) == 2 * m0
    assert all(ratio == 1 for ratio in replay.measure_ratios.values())


def test_ball_telescoping_on_grid(log_bump):
    assert ball_telescoping_check(log_bump, 3) < 1e-12
    replay = ball_telescoping_replay(log_bump, 3)
    assert replay.value == pytest.approx(math.log(16))
    assert set(replay.to_dict()) >= {"head", "steps", "tail", "residual"}


@pytest.mark.parametrize("h", [2.0**-8, 2.0**-9])
def test_ball_telescoping_of_gaussian(h):
    replay = ball_telescoping_replay(Gaussian(0.1), 3, spec=GridSpec(1, 1.0, h))
    assert replay.residual < 1e-6
    assert replay.value == pytest.approx(1.0)
    for ratio in replay.measure_ratios.values():
        assert ratio == pytest.approx(1.0, abs=1e-12)


def test_ball_telescoping_refines_in_2d():
    f = Gaussian(0.1, dimension=2)
    residuals = [
        ball_telescoping_check(f, 3, spec=GridSpec(2, 0.5, h)) for h in [1 / 8, 1 / 64]
    ]
    assert residuals[1] < residuals[0]


def test_ball_telescoping_needs_positive_depth(log_bump):
    with pytest.raises(PreconditionError):
        ball_telescoping_check(log_bump, 0)
    with pytest.raises(PreconditionError):
        bmo_step_bounds(log_bump, 0)


@pytest.mark.parametrize("center", [None, 0.125, -0.25])
def test_bmo_step_bounds(log_bump, center):
    bounds = bmo_step_bounds(log_bump, 4, center)
    assert [b.j for b in bounds] == list(range(-4, 4))
    assert all(b.holds for b in bounds)
    assert all(b.step_value <= b.bound + b.tolerance for b in bounds)


def test_bmo_step_bounds_2d():
    f = LogBump(1 / 16, dimension=2)
    bounds = bmo_step_bounds(f, 3, spec=GridSpec(2, 0.5, 1 / 32))
    assert all(b.holds for b in bounds)


def test_ball_chain(log_bump):
    holder = holder_seminorm(log_bump, 0.5).value
    center = log_bump.argmax_abs()
    chain = ball_chain(log_bump, 3, center, holder, 0.5, 1.0, 0.5)
    assert chain["head_holds"]
    assert chain["tail_holds"]
    assert chain["reconstruction_holds"]
    assert chain["total"] >= abs(chain["value"])
    assert len(chain["middle_terms"]) == 6
    assert chain["closed_bound"] > 0


@pytest.mark.parametrize(
    "field, s, p",
    [
        (LogBump(1 / 32), 0.5, 2),
        (HolderCone(0.5, radius=0.25), 1, 1),
    ],
)
def test_annulus_chain(field, s, p):
    f = sample(field, GridSpec(1, 0.5, 1 / 256))
    k = int(s)
    s1 = s - k
    holder = holder_seminorm(f, 0.5).value
    core = sobolev_seminorm(f, s, p).value
    chain = annulus_chain(
        f,
        solve_dyadic_system(k),
        3,
        f.argmax_abs(),
        s1,
        p,
        0.5,
        0.5,
        holder,
        core,
        log_arg=holder + 1.0,
    )
    assert chain["identity_exact"]
    assert chain["triangle_holds"]
    assert chain["near_holds"]
    assert chain["overlap_holds"]
    assert chain["power_mean_holds"]
    assert chain["triangle_bound"] >= abs(chain["value"])
    assert len(chain["level_sums"]) == 6
    assert len(chain["localized"]) == 6
    assert chain["power_mean_lhs"] <= chain["power_mean_rhs"] * (1 + 1e-12)
