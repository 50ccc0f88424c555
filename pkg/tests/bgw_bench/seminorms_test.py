import math

import numpy as np
import pytest

from bgw_bench.errors import EstimatorError
from bgw_bench.fields import (
    Gaussian,
    GridField,
    GridSpec,
    HolderCone,
    Indicator,
    LogBump,
    Polynomial,
    sample,
)
from bgw_bench.seminorms import (
    Bias,
    CandidateCubes,
    SeminormKind,
    annulus_average,
    ball_average,
    bmo_norm,
    gagliardo_power,
    holder_seminorm,
    localized_gagliardo_powers,
    sobolev_seminorm,
    split_order,
    weighted_integral_at,
    weighted_sup_integral,
)


@pytest.fixture
def constant_field():
    spec = GridSpec(1, 1.0, 1 / 32)
    return GridField(spec, np.full(spec.size, 2.5))


def test_constant_field(constant_field):
    assert bmo_norm(constant_field).value == 0.0
    assert holder_seminorm(constant_field, 0.5).value == 0.0
    for s, p in [(0.5, 2), (0.25, 4), (1.5, 2), (1, 1)]:
        report = sobolev_seminorm(constant_field, s, p)
        assert report.value == pytest.approx(0, abs=1e-9)


def test_constant_analytic_field():
    report = sobolev_seminorm(Polynomial([3]), 0.5, 2, spec=GridSpec(1, 1.0, 1 / 64))
    assert report.value == 0.0
    assert report.meta["exterior"]


@pytest.mark.parametrize("offset", [1.0, -2.5, 100.0])
def test_sobolev_ignores_constant_offset(offset):
    g = sample(Gaussian(0.1), GridSpec(1, 1.0, 1 / 64))
    report = sobolev_seminorm(g, 0.5, 2)
    shifted = sobolev_seminorm(g.scaled(1.0, offset), 0.5, 2)
    assert report.meta["exterior_parts"][0] > 0
    assert shifted.value == pytest.approx(report.value, rel=1e-9)


def test_sobolev_exterior_needs_constant_boundary():
    g = sample(Polynomial([0, 1]), GridSpec(1, 1.0, 1 / 32))
    report = sobolev_seminorm(g, 0.5, 2)
    assert not report.meta["exterior"]
    assert report.meta["exterior_parts"] == [None]
    inner = sobolev_seminorm(g, 0.5, 2, exterior=False)
    assert report.value == inner.value


def test_candidate_cubes():
    spec = GridSpec(1, 1.0, 0.25)
    cubes = CandidateCubes.dyadic(spec)
    assert cubes.sides == (1, 2, 4, 8)
    assert cubes.starts(spec, 8).tolist() == [0, 1]
    assert cubes.count(spec) == 9 + 8 + 6 + 2


def test_candidate_cubes_budget():
    spec = GridSpec(1, 1.0, 1 / 64)
    cubes = CandidateCubes((4,), budget=40)
    starts = cubes.starts(spec, 4)
    assert len(starts) <= 11
    assert (spec.nodes_per_axis - 4) // 2 in starts
    assert starts[0] == 0


def test_bmo_of_indicator():
    report = bmo_norm(Indicator(0.0, 1.0), spec=GridSpec(1, 1.0, 0.25))
    assert report.kind == SeminormKind.BMO
    assert report.bias == Bias.LOWER_BOUND
    assert report.value == pytest.approx(0.5)
    assert report.meta["argmax_side"] == 0.5


def test_bmo_of_indicator_2d():
    report = bmo_norm(
        Indicator([0.0, -1.0], [1.0, 1.0], dimension=2), spec=GridSpec(2, 1.0, 0.25)
    )
    assert report.value == pytest.approx(0.5)


def test_bmo_is_translation_invariant():
    spec = GridSpec(1, 2.0, 1 / 16)
    g = sample(Gaussian(0.2), spec)
    value = bmo_norm(g).value
    assert bmo_norm(g.shifted(3)).value == pytest.approx(value, rel=1e-12)
    assert bmo_norm(g.scaled(1.0, offset=7.0)).value == pytest.approx(value, rel=1e-9)


def test_holder_of_cone():
    report = holder_seminorm(HolderCone(0.5), 0.5, spec=GridSpec(1, 1.0, 1 / 256))
    assert report.value == pytest.approx(1.0, abs=1e-3)
    assert report.params == {"eta": 0.5}


def test_holder_of_linear_function():
    report = holder_seminorm(Polynomial([0, 1]), 0.5, spec=GridSpec(1, 1.0, 1 / 16))
    assert report.value == pytest.approx(math.sqrt(2))
    assert sorted(p[0] for p in report.meta["argmax_pair"]) == [-1.0, 1.0]


@pytest.mark.parametrize(
    "s, expected",
    [(0.5, (0, 0.5)), (1.5, (1, 0.5)), (2.0, (2, 0.0)), (1 + 1e-12, (1, 0.0))],
)
def test_split_order(s, expected):
    k, s1 = split_order(s)
    assert k == expected[0]
    assert s1 == pytest.approx(expected[1])


def test_sobolev_scaling():
    s, p = 0.5, 4
    coarse = sobolev_seminorm(Gaussian(0.1), s, p, spec=GridSpec(1, 1.0, 1 / 128))
    fine = sobolev_seminorm(Gaussian(0.05), s, p, spec=GridSpec(1, 0.5, 1 / 256))
    # [f(x / lambda)]^p = lambda^(n - s p) [f]^p
    assert fine.value / coarse.value == pytest.approx(2**0.25, rel=1e-9)


def test_sobolev_integer_order():
    report = sobolev_seminorm(Gaussian(0.1), 1, 1, spec=GridSpec(1, 1.0, 1 / 512))
    assert report.meta["k"] == 1
    assert report.meta["s1"] == 0.0
    assert report.value == pytest.approx(2.0, rel=1e-3)


def test_sobolev_fractional_above_one():
    report = sobolev_seminorm(Gaussian(0.2), 1.5, 2, spec=GridSpec(1, 1.0, 1 / 64))
    assert report.meta["k"] == 1
    assert report.meta["s1"] == pytest.approx(0.5)
    assert len(report.meta["pieces"]) == 1
    assert report.value > 0


def test_sobolev_workers_do_not_change_the_result():
    g = sample(Gaussian(0.1), GridSpec(1, 1.0, 1 / 64))
    one = sobolev_seminorm(g, 0.5, 2, n_workers=1)
    two = sobolev_seminorm(g, 0.5, 2, n_workers=2)
    assert one.value == two.value


def test_localized_gagliardo_matches_full_sum():
    g = sample(Gaussian(0.2), GridSpec(1, 1.0, 1 / 32))
    membership = np.ones((g.spec.size, 2))
    membership[: g.spec.size // 2, 1] = 0.0
    powers = localized_gagliardo_powers(g, 0.5, 2, membership)
    total, exterior = gagliardo_power(g, 0.5, 2, exterior=False)
    assert exterior is None
    assert powers[0] == pytest.approx(total, rel=1e-12)
    assert 0 < powers[1] < powers[0]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"s": 0.0, "p": 2},
        {"s": 0.5, "p": 0.5},
        {"s": 0.5, "p": 2, "exclusion": 1 / 128},
    ],
)
def test_sobolev_errors(kwargs):
    with pytest.raises(EstimatorError):
        sobolev_seminorm(Gaussian(), spec=GridSpec(1, 1.0, 1 / 32), **kwargs)


def test_weighted_sup_of_indicator():
    spec = GridSpec(1, 1.0, 1 / 512)
    report = weighted_sup_integral(Indicator(0.0, 1.0), 0.5, spec=spec)
    assert report.value == pytest.approx(4 * (math.sqrt(1.5) - 1), abs=1e-3)
    assert report.meta["argmax_z"] == pytest.approx([0.5])
    assert report.meta["l1_norm"] == pytest.approx(1.0)
    assert report.meta["bounded_by_l1"]


def test_weighted_sup_with_candidates():
    g = sample(Indicator(0.0, 1.0), GridSpec(1, 1.0, 1 / 512))
    report = weighted_sup_integral(g, 0.5, z_candidates=[[0.5], [10.0]])
    assert report.meta["n_candidates"] == 2
    assert report.value == pytest.approx(weighted_integral_at(g, [0.5], 0.5))


def test_weighted_sup_of_zero_field():
    g = GridField(GridSpec(1, 1.0, 0.25), np.zeros(9))
    assert weighted_sup_integral(g, 1.0).value == 0.0


@pytest.mark.parametrize(
    "estimator",
    [
        lambda g: holder_seminorm(g, 1.0),
        lambda g: weighted_sup_integral(g, 0.0),
        lambda g: weighted_sup_integral(g, 1.0, z_candidates=np.zeros((0, 1))),
        lambda g: bmo_norm(g, CandidateCubes((100,))),
        lambda g: ball_average(g, 0.0),
    ],
)
def test_estimator_errors(estimator):
    g = sample(Gaussian(), GridSpec(1, 1.0, 0.25))
    with pytest.raises(EstimatorError):
        estimator(g)


def test_averages_of_grid_field():
    g = sample(Polynomial([0, 0, 1]), GridSpec(1, 4.0, 1 / 64))
    assert annulus_average(g, 0) == pytest.approx(7 / 3, rel=1e-4)
    assert ball_average(g, 1.0) == pytest.approx(1 / 3, rel=1e-3)
    assert annulus_average(g, 3, extend_by_zero=True) == 0.0


@pytest.mark.parametrize(
    "estimator",
    [
        lambda g: bmo_norm(g),
        lambda g: holder_seminorm(g, 0.5),
        lambda g: sobolev_seminorm(g, 0.5, 2),
        lambda g: sobolev_seminorm(g, 1, 1),
        lambda g: weighted_sup_integral(g, 0.5),
    ],
)
@pytest.mark.parametrize("factor", [-3.0, 0.25, 10.0])
def test_estimators_are_absolutely_homogeneous(estimator, factor):
    g = sample(Gaussian(0.1), GridSpec(1, 1.0, 1 / 64))
    value = estimator(g).value
    assert estimator(g.scaled(factor)).value == pytest.approx(
        abs(factor) * value, rel=1e-9
    )


def test_bmo_grows_with_the_cube_family():
    g = sample(LogBump(1 / 16), GridSpec(1, 0.5, 1 / 128))
    full = CandidateCubes.dyadic(g.spec)
    values = [
        bmo_norm(g, CandidateCubes(full.sides[:t])).value
        for t in range(1, len(full.sides) + 1)
    ]
    assert values == sorted(values)
    assert values[-1] == bmo_norm(g).value


def test_weighted_sup_grows_with_the_candidates():
    g = sample(LogBump(1 / 16), GridSpec(1, 0.5, 1 / 128))
    z = g.spec.points
    values = [
        weighted_sup_integral(g, 0.5, z_candidates=z[:stop]).value
        for stop in (1, 16, 64, len(z))
    ]
    assert values == sorted(values)


@pytest.mark.parametrize(
    "estimator",
    [
        lambda g: bmo_norm(g),
        lambda g: holder_seminorm(g, 0.5),
        lambda g: sobolev_seminorm(g, 0.5, 2),
        lambda g: weighted_sup_integral(g, 0.5),
    ],
    ids=["bmo", "holder", "sobolev", "weighted_sup"],
)
def test_refinement_stability(estimator):
    f = LogBump(1 / 16)
    coarse = estimator(sample(f, GridSpec(1, 0.5, 1 / 256))).value
    fine = estimator(sample(f, GridSpec(1, 0.5, 1 / 512))).value
    assert fine == pytest.approx(coarse, rel=0.05)
