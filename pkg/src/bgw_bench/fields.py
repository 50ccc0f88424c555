from __future__ import annotations

import importlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, ClassVar, Mapping, Sequence

import numpy as np

from bgw_bench.errors import DomainError, EmptyRegionError
from bgw_bench.types import MultiIndex, Point, Points, Real, Values
from geometry import Region, cell_weights, lattice_measure

GRID_TOLERANCE = 1e-9
BOUNDARY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of spacing `h` on the box [-L, L]^n, n in {1, 2}.

    Nodes are at -L + i h, i = 0, ..., 2L/h, every node is the center of a cell of
    side `h`.
    """

    n: int
    L: float
    h: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"Only dimensions 1 and 2 are supported, got {self.n}.")
        if not (self.L > 0 and self.h > 0):
            raise DomainError(
                f"L and h have to be positive, got L={self.L}, h={self.h}."
            )
        ratio = self.L / self.h
        if abs(ratio - round(ratio)) > GRID_TOLERANCE * max(ratio, 1):
            raise DomainError(
                f"L / h has to be an integer so that the grid contains the origin, "
                f"got {ratio}."
            )

    @property
    def cells(self) -> int:
        return int(round(2 * self.L / self.h))

    @property
    def nodes_per_axis(self) -> int:
        return self.cells + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_axis,) * self.n

    @property
    def size(self) -> int:
        return self.nodes_per_axis**self.n

    @cached_property
    def axis(self) -> np.ndarray[float]:
        return -self.L + self.h * np.arange(self.nodes_per_axis)

    @cached_property
    def points(self) -> Points:
        """Return all nodes as rows of a 2d array in row-major order."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, points: Points) -> np.ndarray[bool]:
        return np.all(np.abs(points) <= self.L * (1 + GRID_TOLERANCE), axis=1)

    def nearest_indices(self, points: Points) -> np.ndarray[int]:
        """Return flat indices of the nodes nearest to given points."""
        if not np.all(self.contains(points)):
            raise DomainError(f"Point outside of the domain [-{self.L}, {self.L}]^n.")
        idx = np.clip(np.rint((points + self.L) / self.h), 0, self.cells).astype(int)
        return np.ravel_multi_index(tuple(idx.T), self.shape)

    def shrunk(self, cells: int) -> GridSpec:
        """Return the grid with `cells` nodes removed on every side."""
        L = self.L - cells * self.h
        if L <= 0:
            raise DomainError(f"Grid with {self.cells} cells cannot shrink by {cells}.")
        return GridSpec(self.n, L, self.h)

    def weights(self, region: Region) -> tuple[np.ndarray[int], np.ndarray[float]]:
        return cell_weights(self.n, self.L, self.h, region)

    def region_measure(self, region: Region) -> float:
        """Return the quadrature measure of a region (the grid extended to R^n)."""
        return lattice_measure(self.n, self.L, self.h, region)

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "h": self.h}

    @classmethod
    def from_dict(cls, data: dict) -> GridSpec:
        return cls(int(data["n"]), float(data["L"]), float(data["h"]))


def _as_points(x: Sequence[float] | float | Points, n: int) -> Points:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1) if n == 1 else x.reshape(1, n)
    return x


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a function at the nodes of a GridSpec, stored in grid shape."""

    spec: GridSpec
    values: np.ndarray[float]

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.spec.size:
            raise DomainError(
                f"Expected {self.spec.size} samples for {self.spec}, got {values.size}."
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("Grid field samples have to be finite.")
        values = values.reshape(self.spec.shape)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def flat(self) -> Values:
        return self.values.ravel()

    def __call__(self, x: Sequence[float] | float | Points) -> Values:
        """Return values at the nodes nearest to given points."""
        points = _as_points(x, self.n)
        return self.flat[self.spec.nearest_indices(points)]

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def argmax_abs(self) -> Point:
        """Return the first node (row-major) where |f| is maximal."""
        return self.spec.points[int(np.argmax(np.abs(self.flat)))]

    def boundary_values(self) -> Values:
        """Return the samples at the nodes on the faces of the grid box."""
        if self.n == 1:
            return self.values[[0, -1]]
        return np.concatenate(
            [self.values[0], self.values[-1], self.values[:, 0], self.values[:, -1]]
        )

    def boundary_max_abs(self) -> float:
        return float(np.abs(self.boundary_values()).max())

    def boundary_constant(self, tolerance: float = BOUNDARY_TOLERANCE) -> float | None:
        """Return the value the field takes on the whole box boundary, if any.

        The boundary counts as constant when its spread is within `tolerance` times
        the largest deviation of the field from the boundary mean. None otherwise.
        """
        boundary = self.boundary_values()
        value = float(boundary.mean())
        deviation = float(np.abs(self.flat - value).max())
        if np.ptp(boundary) > tolerance * deviation:
            return None
        return value

    def support_radius(self, center: Point | None = None) -> float:
        """Return the radius of the smallest centered ball containing the support."""
        center = np.zeros(self.n) if center is None else np.asarray(center, float)
        nonzero = self.flat != 0
        if not nonzero.any():
            return 0.0
        dist = np.linalg.norm(self.spec.points[nonzero] - center, axis=1)
        return float(dist.max() + self.spec.h * math.sqrt(self.n) / 2)

    def shifted(self, cells: Sequence[int] | int) -> GridField:
        """Translate the samples by whole cells, filling vacated nodes with zeros."""
        cells = (cells,) * self.n if isinstance(cells, int) else tuple(cells)
        shifted = np.zeros_like(self.values)
        src = []
        dst = []
        for c in cells:
            size = self.spec.nodes_per_axis
            if abs(c) >= size:
                return GridField(self.spec, shifted)
            src.append(slice(max(-c, 0), size - max(c, 0)))
            dst.append(slice(max(c, 0), size - max(-c, 0)))
        shifted[tuple(dst)] = self.values[tuple(src)]
        return GridField(self.spec, shifted)

    def scaled(self, factor: float, offset: float = 0.0) -> GridField:
        return GridField(self.spec, factor * self.values + offset)

    def to_dict(self) -> dict:
        return {**self.spec.to_dict(), "values": self.flat.tolist()}


class CutoffPsi:
    """C^1 cutoff equal to 1 on [0, 1/4] and 0 on [1/2, inf).

    On [1/4, 1/2] the profile is the cubic 1 - 3t^2 + 2t^3, t = (r - 1/4) / (1/4).
    """

    inner = 0.25
    outer = 0.5

    def _t(self, r: np.ndarray) -> np.ndarray:
        return np.clip((r - self.inner) / (self.outer - self.inner), 0.0, 1.0)

    def __call__(self, r: np.ndarray | float) -> np.ndarray | float:
        t = self._t(np.asarray(r, dtype=float))
        return 1 - 3 * t**2 + 2 * t**3

    def derivative(self, r: np.ndarray | float) -> np.ndarray | float:
        t = self._t(np.asarray(r, dtype=float))
        return (-6 * t + 6 * t**2) / (self.outer - self.inner)


class AnalyticField(ABC):
    """Closed-form function on R^n."""

    family: ClassVar[str]

    def __init__(self, dimension: int = 1):
        if dimension not in (1, 2):
            raise DomainError(
                f"Only dimensions 1 and 2 are supported, got {dimension}."
            )
        self.n = dimension

    @abstractmethod
    def _evaluate(self, points: Points) -> Values:
        pass

    @abstractmethod
    def params(self) -> dict:
        pass

    def __call__(self, x: Sequence[float] | float | Points) -> Values:
        return np.asarray(self._evaluate(_as_points(x, self.n)), dtype=float)

    def support_radius(self) -> float | None:
        """Return R such that the support lies in the ball B_R, None if unbounded."""
        return None

    def to_dict(self) -> dict:
        return {"family": self.family, "dimension": self.n, **self.params()}

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({params}, dimension={self.n})"


class LogBump(AnalyticField):
    """The family f(x) = -log(|x| + delta) psi(|x|), 0 < delta < 1/4."""

    family = "log_bump"
    psi = CutoffPsi()

    def __init__(self, delta: float, dimension: int = 1):
        super().__init__(dimension)
        if not 0 < delta < 0.25:
            raise DomainError(f"LogBump requires 0 < delta < 1/4, got {delta}.")
        self.delta = float(delta)

    def _evaluate(self, points: Points) -> Values:
        r = np.linalg.norm(points, axis=1)
        return -np.log(r + self.delta) * self.psi(r)

    def support_radius(self) -> float:
        return CutoffPsi.outer

    def params(self) -> dict:
        return {"delta": self.delta}


class HolderCone(AnalyticField):
    """Compactly supported cone min(|x|^eta, (2R - |x|)_+^eta).

    Its Hölder seminorm of order eta is 1, attained at pairs (x, 0).
    """

    family = "holder_cone"

    def __init__(self, eta: float, radius: float = 0.5, dimension: int = 1):
        super().__init__(dimension)
        if not 0 < eta < 1:
            raise DomainError(f"HolderCone requires eta in (0, 1), got {eta}.")
        if radius <= 0:
            raise DomainError(f"HolderCone radius has to be positive, got {radius}.")
        self.eta = float(eta)
        self.radius = float(radius)

    def _evaluate(self, points: Points) -> Values:
        r = np.linalg.norm(points, axis=1)
        outer = np.clip(2 * self.radius - r, 0, None)
        return np.minimum(r**self.eta, outer**self.eta)

    def support_radius(self) -> float:
        return 2 * self.radius

    def params(self) -> dict:
        return {"eta": self.eta, "radius": self.radius}


class Gaussian(AnalyticField):
    family = "gaussian"

    def __init__(
        self,
        sigma: float = 1.0,
        amplitude: float = 1.0,
        center: Sequence[float] | float = 0.0,
        dimension: int = 1,
    ):
        super().__init__(dimension)
        if sigma <= 0:
            raise DomainError(f"Gaussian requires sigma > 0, got {sigma}.")
        self.sigma = float(sigma)
        self.amplitude = float(amplitude)
        self.center = np.broadcast_to(np.asarray(center, dtype=float), (dimension,))

    def _evaluate(self, points: Points) -> Values:
        r2 = np.sum((points - self.center) ** 2, axis=1)
        return self.amplitude * np.exp(-r2 / (2 * self.sigma**2))

    def params(self) -> dict:
        return {
            "sigma": self.sigma,
            "amplitude": self.amplitude,
            "center": self.center.tolist(),
        }


class Polynomial(AnalyticField):
    """Polynomial sum_e c_e x^e with exponent tuples e.

    In 1D the coefficients may be given as a sequence c_0, c_1, ..., integer or
    Fraction coefficients are kept exact for the exact 1D integration path.
    """

    family = "polynomial"

    def __init__(
        self,
        coeffs: Sequence[Real] | Mapping[int | MultiIndex, Real],
        dimension: int = 1,
    ):
        super().__init__(dimension)
        if isinstance(coeffs, Mapping):
            items = coeffs.items()
        else:
            items = enumerate(coeffs)

        self.coeffs: dict[MultiIndex, Real] = {}
        for exponent, c in items:
            if isinstance(exponent, (int, str)):
                exponent = (int(exponent),)
            else:
                exponent = tuple(int(e) for e in exponent)
            if len(exponent) != dimension or min(exponent) < 0:
                raise DomainError(
                    f"Invalid exponent {exponent} in dimension {dimension}."
                )
            if isinstance(c, str):
                c = Fraction(c)
            if c != 0:
                self.coeffs[exponent] = c

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def _evaluate(self, points: Points) -> Values:
        values = np.zeros(len(points))
        for exponent, c in self.coeffs.items():
            values += float(c) * np.prod(points ** np.array(exponent), axis=1)
        return values

    def exact_value(self, x: Real) -> Fraction:
        """Evaluate a 1D polynomial exactly."""
        x = Fraction(x)
        return sum(
            (Fraction(c) * x ** e[0] for e, c in self.coeffs.items()), Fraction(0)
        )

    def exact_integral(self, region: Region) -> Fraction:
        """Integrate a 1D polynomial over a region exactly."""
        if self.n != 1:
            raise DomainError("Exact integration is only available in 1D.")
        total = Fraction(0)
        for lower, upper in region.intervals():
            lower, upper = Fraction(lower), Fraction(upper)
            for (e,), c in self.coeffs.items():
                total += Fraction(c) * (upper ** (e + 1) - lower ** (e + 1)) / (e + 1)
        return total

    def params(self) -> dict:
        return {
            "terms": [
                [list(e), str(c) if isinstance(c, Fraction) else c]
                for e, c in sorted(self.coeffs.items())
            ]
        }


class Indicator(AnalyticField):
    """Indicator of the half-open box lower <= x < upper."""

    family = "indicator"

    def __init__(
        self,
        lower: Sequence[float] | float,
        upper: Sequence[float] | float,
        dimension: int = 1,
    ):
        super().__init__(dimension)
        self.lower = np.broadcast_to(np.asarray(lower, dtype=float), (dimension,))
        self.upper = np.broadcast_to(np.asarray(upper, dtype=float), (dimension,))

    def _evaluate(self, points: Points) -> Values:
        inside = np.all((points >= self.lower) & (points < self.upper), axis=1)
        return inside.astype(float)

    def support_radius(self) -> float:
        corners = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(np.linalg.norm(corners))

    def params(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


class CustomField(AnalyticField):
    """Field given by a vectorized callable mapping (M, n) points to M values."""

    family = "custom"

    def __init__(
        self,
        func: Callable[[Points], Values],
        dimension: int = 1,
        target: str | None = None,
    ):
        super().__init__(dimension)
        self.func = func
        self.target = target

    @classmethod
    def from_target(cls, target: str, dimension: int = 1) -> CustomField:
        """Import the callable from a "module:function" path."""
        module_name, _, func_name = target.partition(":")
        if not func_name:
            raise DomainError(f"Expected 'module:function', got {target}.")
        func = getattr(importlib.import_module(module_name), func_name)
        return cls(func, dimension, target)

    def _evaluate(self, points: Points) -> Values:
        # elementwise ufuncs return one value per coordinate in 1D
        return np.asarray(self.func(points), dtype=float).reshape(len(points))

    def params(self) -> dict:
        return {"target": self.target}


FIELD_FAMILIES: dict[str, type[AnalyticField]] = {
    cls.family: cls
    for cls in (LogBump, HolderCone, Gaussian, Polynomial, Indicator, CustomField)
}


def analytic_field_from_dict(data: dict) -> AnalyticField:
    """Build an analytic field from its descriptor (see `AnalyticField.to_dict`)."""
    data = dict(data)
    family = data.pop("family")
    dimension = int(data.pop("dimension", 1))
    if family not in FIELD_FAMILIES:
        raise DomainError(f"Unknown field family {family}.")
    if family == "custom":
        return CustomField.from_target(data["target"], dimension)
    if family == "polynomial":
        if "terms" in data:
            coeffs = {tuple(e): c for e, c in data["terms"]}
        else:
            coeffs = data["coeffs"]
        return Polynomial(coeffs, dimension)
    return FIELD_FAMILIES[family](**data, dimension=dimension)


Field = GridField | AnalyticField


def evaluate(field: Field, x: Sequence[float] | float) -> float:
    """Evaluate a field at a single point.

    Grid fields return the sample at the nearest node and reject points outside
    their box.
    """
    return float(field(x)[0])


def sample(field: Field, spec: GridSpec) -> GridField:
    """Evaluate an analytic field at all nodes of a grid."""
    if isinstance(field, GridField):
        if field.spec != spec:
            raise DomainError(f"Grid field lives on {field.spec}, not on {spec}.")
        return field
    if field.n != spec.n:
        raise DomainError(f"Field of dimension {field.n} sampled on {spec}.")
    return GridField(spec, field(spec.points))


def as_grid_field(field: Field, spec: GridSpec | None = None) -> GridField:
    """Return the grid samples of a field, analytic fields need a grid spec."""
    if isinstance(field, GridField):
        return field
    if spec is None:
        raise DomainError(f"A grid spec is required to sample {field}.")
    return sample(field, spec)


def covering_spec(region: Region, n: int, h: float) -> GridSpec:
    """Return the smallest symmetric grid of spacing `h` covering a region."""
    lower, upper = region.bounds(n)
    extent = max(np.abs(lower).max(), np.abs(upper).max())
    return GridSpec(n, h * max(math.ceil(extent / h) + 1, 1), h)


def box_integral(field: Field, region: Region, h: float | None = None) -> Real:
    """Integrate a field over a box, ball or annulus.

    Grid fields are integrated by the midpoint rule on their cells, cells cut by the
    region boundary contribute proportionally to the fraction covered by the region.
    Values outside the grid box are taken as zero.

    Parameters
    ----------
    field
        Integrand.
    region
        Integration domain.
    h
        Spacing of the grid used to sample analytic fields. 1D polynomials are
        integrated exactly and return a Fraction.

    Returns
    -------
    integral
    """
    if isinstance(field, Polynomial) and field.n == 1:
        return field.exact_integral(region)

    if isinstance(field, AnalyticField):
        if h is None:
            raise DomainError(f"A grid spacing is required to integrate {field}.")
        field = sample(field, covering_spec(region, field.n, h))

    indices, weights = field.spec.weights(region)
    if len(indices) == 0:
        raise EmptyRegionError(f"{region} does not intersect the field domain.")
    return float(np.dot(weights, field.flat[indices]))


def region_average(
    field: Field,
    region: Region,
    extend_by_zero: bool = False,
    h: float | None = None,
) -> Real:
    """Return the integral of a field over a region divided by its exact measure.

    With `extend_by_zero` a region missing the grid box has average 0, otherwise
    `EmptyRegionError` is raised.
    """
    if isinstance(field, Polynomial) and field.n == 1:
        return field.exact_integral(region) / region.exact_measure()

    if isinstance(field, GridField) and not extend_by_zero:
        lower, upper = region.bounds(field.n)
        limit = field.spec.L + field.spec.h / 2
        if np.any(lower < -limit) or np.any(upper > limit):
            raise DomainError(f"{region} is not contained in the field domain.")

    try:
        integral = box_integral(field, region, h)
    except EmptyRegionError:
        if not extend_by_zero:
            raise
        return 0.0
    return integral / region.measure(field.n)
