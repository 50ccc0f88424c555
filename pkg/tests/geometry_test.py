import math

import numpy as np
import pytest
from scipy.integrate import quad

from geometry import (
    Annulus,
    Ball,
    Box,
    ball_volume,
    cell_weights,
    dyadic_annulus,
    enlarged_annulus,
    exterior_kernel_mass,
    lattice_measure,
    points_dist,
)


@pytest.mark.parametrize(
    "n, radius, expected",
    [
        (1, 1.0, 2.0),
        (1, 0.25, 0.5),
        (2, 1.0, math.pi),
        (2, 2.0, 4 * math.pi),
    ],
)
def test_ball_volume(n, radius, expected):
    assert ball_volume(n, radius) == pytest.approx(expected)


def test_points_dist():
    points1 = np.array([[0.0, 0.0], [1.0, 1.0]])
    points2 = np.array([[3.0, 4.0]])
    dist = points_dist(points1, points2)
    assert dist.shape == (2, 1)
    assert dist[0, 0] == pytest.approx(5.0)
    assert dist[1, 0] == pytest.approx(math.sqrt(13))


def test_points_dist_1d():
    dist = points_dist(np.array([[0.0], [2.0]]), np.array([[-1.0], [0.5], [3.0]]))
    np.testing.assert_allclose(dist, [[1.0, 0.5, 3.0], [3.0, 1.5, 1.0]])


@pytest.mark.parametrize(
    "region, points, expected",
    [
        (Box(0, 1), [[0.0], [0.5], [1.0]], [True, True, False]),
        (Ball(1), [[-1.0], [0.0], [0.999]], [False, True, True]),
        (Annulus(1, 2), [[0.5], [1.0], [-1.5], [2.0]], [False, True, True, False]),
        (Ball(1, center=[1.0, 1.0]), [[1.0, 1.5], [0.0, 0.0]], [True, False]),
    ],
)
def test_region_contains(region, points, expected):
    mask = region.contains(np.array(points))
    assert mask.tolist() == expected


def test_dyadic_regions():
    annulus = dyadic_annulus(-2)
    assert (annulus.inner, annulus.outer) == (0.25, 0.5)

    enlarged = enlarged_annulus(2, 1)
    assert (enlarged.inner, enlarged.outer) == (1.0, 64.0)


@pytest.mark.parametrize(
    "region, expected",
    [
        (Ball(0.5), 1.0),
        (Annulus(0.25, 0.5), 0.5),
        (Box(-0.25, 0.75), 1.0),
    ],
)
def test_exact_measure(region, expected):
    assert region.exact_measure() == expected


@pytest.mark.parametrize("radius", [0.25, 0.5, 1.0, 4.0])
def test_lattice_measure_of_dyadic_balls_is_exact_in_1d(radius):
    assert lattice_measure(1, 1.0, 2**-6, Ball(radius)) == 2 * radius


def test_lattice_measure_2d_converges():
    h = 2**-6
    measure = lattice_measure(2, 1.0, h, Ball(0.5))
    assert measure == pytest.approx(math.pi / 4, rel=1e-3)


@pytest.mark.parametrize(
    "n, region",
    [
        (1, Ball(0.3)),
        (1, Annulus(0.1, 0.45, center=0.2)),
        (2, Ball(0.5, center=[0.1, -0.2])),
        (2, Box([-0.3, -0.1], [0.2, 0.4])),
    ],
)
def test_cell_weights_sum_to_lattice_measure(n, region):
    h = 1 / 32
    _, weights = cell_weights(n, 1.0, h, region)
    assert weights.sum() == pytest.approx(lattice_measure(n, 1.0, h, region))


def test_cell_weights_of_tiny_region():
    indices, weights = cell_weights(1, 1.0, 0.25, Ball(1e-6))
    assert indices.tolist() == [4]
    assert weights[0] == pytest.approx(2e-6)


def test_cell_weights_outside_grid():
    indices, weights = cell_weights(1, 1.0, 0.25, Box(5, 6))
    assert len(indices) == 0
    assert len(weights) == 0


@pytest.mark.parametrize(
    "x, half_width, beta, expected",
    [
        (0.0, 1.0, 1.0, 2.0),
        (0.5, 1.0, 1.0, 2.0 + 2 / 3),
        (0.0, 0.5, 0.5, 4 * math.sqrt(2)),
    ],
)
def test_exterior_kernel_mass_1d(x, half_width, beta, expected):
    mass = exterior_kernel_mass(np.array([[x]]), half_width, beta)
    assert mass[0] == pytest.approx(expected)


def test_exterior_kernel_mass_2d_matches_quadrature():
    half_width = 1.0
    beta = 1.0

    def integrand(theta):
        exit_distance = half_width / max(abs(math.cos(theta)), abs(math.sin(theta)))
        return exit_distance**-beta / beta

    kinks = [math.pi / 4 * (2 * i + 1) for i in range(4)]
    expected, _ = quad(integrand, 0, 2 * math.pi, points=kinks, limit=200)
    mass = exterior_kernel_mass(np.zeros((1, 2)), half_width, beta, n_angles=1024)
    assert mass[0] == pytest.approx(expected, rel=1e-4)
