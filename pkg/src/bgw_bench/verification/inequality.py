from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from bgw_bench.coefficients import solve_dyadic_system
from bgw_bench.errors import PreconditionError
from bgw_bench.fields import Field, GridField, GridSpec, as_grid_field
from bgw_bench.seminorms import (
    CandidateCubes,
    SeminormReport,
    bmo_norm,
    holder_seminorm,
    sobolev_seminorm,
    split_order,
    weighted_sup_integral,
)
from bgw_bench.utils import log2_plus, log_plus
from bgw_bench.verification.chain import (
    annulus_chain,
    ball_chain,
    ball_telescoping_replay,
    bmo_step_bounds,
    m0_rule,
)

logger = logging.getLogger(__name__)

COMPACT_SUPPORT_TOLERANCE = 1e-6
CRITICAL_TOLERANCE = 1e-9


class Theorem(str, Enum):
    BGW_BMO = "bgw_bmo"
    BGW_SOBOLEV = "bgw_sobolev"


def inequality_ratio(
    lhs: float,
    core: float,
    log_arg: float,
    exponent: float,
    log: Callable[[float], float] = log_plus,
) -> float:
    """Return lhs / (1 + core (1 + log(log_arg)^exponent))."""
    return lhs / (1 + core * (1 + log(log_arg) ** exponent))


@dataclass
class InequalityReport:
    """Both sides of a logarithmic inequality evaluated for one field.

    `ratio` uses the natural log+, `ratio_log2` the base 2 variant. `compact` holds
    the variant with log argument R^(n - alpha + eta) + Hölder seminorm, R being the
    measured support radius.
    """

    theorem: Theorem
    lhs: float
    core_norm: float
    log_arg: float
    exponent: float
    ratio: float
    ratio_log2: float
    m0: int
    params: dict = field(default_factory=dict)
    norms: dict[str, SeminormReport] = field(default_factory=dict)
    chain: dict = field(default_factory=dict)
    compact: dict | None = None

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "lhs": self.lhs,
            "core_norm": self.core_norm,
            "log_arg": self.log_arg,
            "exponent": self.exponent,
            "ratio": self.ratio,
            "ratio_log2": self.ratio_log2,
            "m0": self.m0,
            "params": self.params,
            "norms": {name: report.to_dict() for name, report in self.norms.items()},
            "chain": self.chain,
            "compact": self.compact,
        }

    def to_row(self) -> dict:
        return {
            "theorem": self.theorem.value,
            **self.params,
            "lhs": self.lhs,
            "core_norm": self.core_norm,
            "log_arg": self.log_arg,
            "exponent": self.exponent,
            "m0": self.m0,
            "ratio": self.ratio,
            "ratio_log2": self.ratio_log2,
            **{name: report.value for name, report in self.norms.items()},
            "ratio_compact": None if self.compact is None else self.compact["ratio"],
        }

    @property
    def chain_holds(self) -> bool:
        """Return whether every check recorded in the chain holds."""
        return all(
            value
            for key, value in _flatten_checks(self.chain)
            if key.endswith(("holds", "identity_exact"))
        )


def _flatten_checks(chain: dict, prefix: str = ""):
    for key, value in chain.items():
        if isinstance(value, dict):
            yield from _flatten_checks(value, f"{prefix}{key}.")
        elif isinstance(value, bool):
            yield f"{prefix}{key}", value


def _check_exponents(n: int, eta: float, alpha: float):
    if not 0 < eta < 1:
        raise PreconditionError(f"eta has to be in (0, 1), got {eta}.")
    if not 0 < alpha < n:
        raise PreconditionError(f"alpha has to be in (0, {n}), got {alpha}.")


def _require_compact_support(f: GridField):
    if f.boundary_max_abs() > COMPACT_SUPPORT_TOLERANCE * f.max_abs():
        raise PreconditionError(
            "K_alpha is infinite: the field does not vanish on the grid boundary, "
            "a compactly supported field is required."
        )


def _compact_variant(
    f: GridField,
    lhs: float,
    core: float,
    holder: float,
    eta: float,
    alpha: float,
    exponent: float,
) -> dict:
    radius = f.support_radius()
    log_arg = radius ** (f.n - alpha + eta) + holder
    return {
        "radius": radius,
        "log_arg": log_arg,
        "ratio": inequality_ratio(lhs, core, log_arg, exponent),
        "ratio_log2": inequality_ratio(lhs, core, log_arg, exponent, log2_plus),
    }


def _zero_report(theorem: Theorem, exponent: float, params: dict) -> InequalityReport:
    return InequalityReport(
        theorem=theorem,
        lhs=0.0,
        core_norm=0.0,
        log_arg=0.0,
        exponent=exponent,
        ratio=0.0,
        ratio_log2=0.0,
        m0=1,
        params=params,
    )


def check_bgw_bmo(
    f: Field,
    eta: float,
    alpha: float,
    spec: GridSpec | None = None,
    cube_family: CandidateCubes | None = None,
    chain: bool = True,
    n_workers: int = 1,
) -> InequalityReport:
    """Evaluate the BMO form of the logarithmic inequality for one field.

    Parameters
    ----------
    f
        Compactly supported grid field, or analytic field with `spec`.
    eta
        Hölder exponent in (0, 1).
    alpha
        Decay exponent in (0, n).
    spec
        Grid used to sample analytic fields.
    cube_family
        Candidate cubes of the BMO estimator.
    chain
        Replay the ball decomposition at the point where |f| is maximal.
    n_workers
        Number of worker processes.

    Returns
    -------
    report
    """
    f = as_grid_field(f, spec)
    _check_exponents(f.n, eta, alpha)
    params = {"eta": eta, "alpha": alpha}
    lhs = f.max_abs()
    if lhs == 0:
        return _zero_report(Theorem.BGW_BMO, 1.0, params)
    _require_compact_support(f)

    bmo = bmo_norm(f, cube_family, n_workers=n_workers)
    holder = holder_seminorm(f, eta, n_workers=n_workers)
    k_alpha = weighted_sup_integral(f, alpha, n_workers=n_workers)
    log_arg = k_alpha.value + holder.value
    m0 = m0_rule(log_arg, f.n, alpha, eta)
    logger.info("Chose m0 = %d for log argument %g", m0, log_arg)

    report = InequalityReport(
        theorem=Theorem.BGW_BMO,
        lhs=lhs,
        core_norm=bmo.value,
        log_arg=log_arg,
        exponent=1.0,
        ratio=inequality_ratio(lhs, bmo.value, log_arg, 1.0),
        ratio_log2=inequality_ratio(lhs, bmo.value, log_arg, 1.0, log2_plus),
        m0=m0,
        params=params,
        norms={"bmo": bmo, "holder": holder, "k_alpha": k_alpha},
        compact=_compact_variant(f, lhs, bmo.value, holder.value, eta, alpha, 1.0),
    )

    if chain:
        center = f.argmax_abs()
        steps = bmo_step_bounds(f, m0, center)
        scale = 2**f.n * bmo.value
        report.chain = {
            "center": center.tolist(),
            "m0": m0,
            "telescoping": ball_telescoping_replay(f, m0, center).to_dict(),
            "steps": [step.to_dict() for step in steps],
            "steps_holds": all(step.holds for step in steps),
            "steps_bmo_ratio": max(step.bound for step in steps) / scale
            if scale > 0
            else None,
            "terms": ball_chain(f, m0, center, holder.value, eta, bmo.value, alpha),
        }
    return report


def check_bgw_sobolev(
    f: Field,
    s: float,
    p: float,
    eta: float,
    alpha: float,
    spec: GridSpec | None = None,
    exclusion: float | None = None,
    chain: bool = True,
    n_workers: int = 1,
) -> InequalityReport:
    """Evaluate the critical Sobolev form of the logarithmic inequality for one field.

    Requires s p = n. The chain replays the annulus decomposition with the dyadic
    coefficients of order [s], the localized pieces are Gagliardo sums of D^[s] f for
    fractional s and L^p integrals of D^s f for integer s.

    Parameters
    ----------
    f
        Compactly supported grid field, or analytic field with `spec`.
    s
        Smoothness order.
    p
        Integrability exponent, s p = n.
    eta
        Hölder exponent in (0, 1).
    alpha
        Decay exponent in (0, n).
    spec
        Grid used to sample analytic fields.
    exclusion
        Diagonal exclusion radius of the Gagliardo sums.
    chain
        Replay the annulus decomposition at the point where |f| is maximal.
    n_workers
        Number of worker processes.

    Returns
    -------
    report
    """
    f = as_grid_field(f, spec)
    if s <= 0 or p < 1:
        raise PreconditionError(f"Expected s > 0 and p >= 1, got s={s}, p={p}.")
    if abs(s * p - f.n) > CRITICAL_TOLERANCE:
        raise PreconditionError(f"sp = n is required, got s * p = {s * p}, n = {f.n}.")
    _check_exponents(f.n, eta, alpha)
    exponent = (p - 1) / p
    params = {"s": s, "p": p, "eta": eta, "alpha": alpha}
    lhs = f.max_abs()
    if lhs == 0:
        return _zero_report(Theorem.BGW_SOBOLEV, exponent, params)
    _require_compact_support(f)

    sobolev = sobolev_seminorm(f, s, p, exclusion, n_workers=n_workers)
    holder = holder_seminorm(f, eta, n_workers=n_workers)
    k_alpha = weighted_sup_integral(f, alpha, n_workers=n_workers)
    log_arg = k_alpha.value + holder.value
    m0 = m0_rule(log_arg, f.n, alpha, eta)
    logger.info("Chose m0 = %d for log argument %g", m0, log_arg)

    report = InequalityReport(
        theorem=Theorem.BGW_SOBOLEV,
        lhs=lhs,
        core_norm=sobolev.value,
        log_arg=log_arg,
        exponent=exponent,
        ratio=inequality_ratio(lhs, sobolev.value, log_arg, exponent),
        ratio_log2=inequality_ratio(lhs, sobolev.value, log_arg, exponent, log2_plus),
        m0=m0,
        params=params,
        norms={"sobolev": sobolev, "holder": holder, "k_alpha": k_alpha},
        compact=_compact_variant(
            f, lhs, sobolev.value, holder.value, eta, alpha, exponent
        ),
    )

    if chain:
        k, s1 = split_order(s)
        report.chain = annulus_chain(
            f,
            solve_dyadic_system(k),
            m0,
            f.argmax_abs(),
            s1,
            p,
            eta,
            alpha,
            holder.value,
            sobolev.value,
            log_arg,
            exclusion,
        )
        report.chain["m0"] = m0
    return report
