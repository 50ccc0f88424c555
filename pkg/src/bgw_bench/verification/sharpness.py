"""Sweeps over the LogBump family showing that the logarithm exponent is sharp.

For f(x) = -log(|x| + delta) psi(|x|) the sup norm grows like |log delta| while the
BMO norm and K_alpha stay bounded and the p-th power of the critical Sobolev
seminorm grows like |log delta|. The inequality ratios with the proper exponent of
the logarithm therefore stay bounded and ratios with a smaller exponent diverge.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
import pandas as pd

from bgw_bench.errors import PreconditionError
from bgw_bench.fields import GridSpec, LogBump, sample
from bgw_bench.parallel import map_blocks
from bgw_bench.seminorms import (
    bmo_norm,
    holder_seminorm,
    sobolev_seminorm,
    weighted_sup_integral,
)
from bgw_bench.utils import (
    fit_growth_exponent,
    fit_log_slope,
    is_strictly_increasing,
    spread,
)
from bgw_bench.verification.chain import m0_rule
from bgw_bench.verification.inequality import CRITICAL_TOLERANCE, inequality_ratio

logger = logging.getLogger(__name__)

MIN_DELTA_CELLS = 4
MIN_SWEEP_LENGTH = 4


@dataclass(frozen=True)
class SharpnessCriteria:
    """Thresholds of the sharpness assertions.

    With the logarithm lowered to the power gamma < 1 the BMO form ratio grows like
    |log delta|^(1 - gamma). The sweep has to reach at least `growth_fraction` of
    that growth on a log scale, i.e. a factor of
    (max |log delta| / min |log delta|)^((1 - gamma) growth_fraction).
    """

    linf_exponent: tuple[float, float] = (0.9, 1.1)
    sobolev_exponent: tuple[float, float] = (0.8, 1.2)
    max_spread: float = 3.0
    growth_fraction: float = 0.5

    @classmethod
    def from_dict(cls, data: dict) -> SharpnessCriteria:
        data = dict(data)
        for key in ("linf_exponent", "sobolev_exponent"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class SharpnessRow:
    delta: float
    linf: float
    bmo: float
    sobolev: float
    k_alpha: float
    holder: float
    log_arg: float
    m0: int
    ratio_1: float
    ratio_gamma: float
    ratio_sobolev: float
    ratio_sobolev_gamma: float


def _sweep_row(
    delta: float,
    spec: GridSpec,
    s: float,
    p: float,
    eta: float,
    alpha: float,
    gamma_test: float,
    exclusion: float | None,
) -> SharpnessRow:
    f = sample(LogBump(delta, spec.n), spec)
    linf = f.max_abs()
    bmo = bmo_norm(f).value
    sobolev = sobolev_seminorm(f, s, p, exclusion).value
    holder = holder_seminorm(f, eta).value
    k_alpha = weighted_sup_integral(f, alpha).value
    log_arg = k_alpha + holder
    sobolev_exponent = (p - 1) / p
    logger.debug("delta = %g: sup %g, BMO %g, Sobolev %g", delta, linf, bmo, sobolev)
    return SharpnessRow(
        delta=delta,
        linf=linf,
        bmo=bmo,
        sobolev=sobolev,
        k_alpha=k_alpha,
        holder=holder,
        log_arg=log_arg,
        m0=m0_rule(log_arg, spec.n, alpha, eta),
        ratio_1=inequality_ratio(linf, bmo, log_arg, 1.0),
        ratio_gamma=inequality_ratio(linf, bmo, log_arg, gamma_test),
        ratio_sobolev=inequality_ratio(linf, sobolev, log_arg, sobolev_exponent),
        ratio_sobolev_gamma=inequality_ratio(
            linf, sobolev, log_arg, gamma_test * sobolev_exponent
        ),
    )


@dataclass
class SharpnessSweep:
    """Per-delta quantities of a LogBump sweep together with the fitted growth.

    `checks` maps every assertion to its outcome, `fits` holds the fitted exponents
    and spreads the assertions are made on.
    """

    deltas: list[float]
    rows: list[SharpnessRow]
    params: dict
    fits: dict = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def column(self, name: str) -> np.ndarray[float]:
        return np.array([getattr(row, name) for row in self.rows], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(row) for row in self.rows])

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "deltas": self.deltas,
            "rows": [asdict(row) for row in self.rows],
            "fits": self.fits,
            "checks": self.checks,
            "passed": self.passed,
        }


def _check_sweep_preconditions(
    deltas: Sequence[float], spec: GridSpec, s: float, p: float, gamma_test: float
):
    if abs(s * p - spec.n) > CRITICAL_TOLERANCE:
        raise PreconditionError(
            f"sp = n is required, got s * p = {s * p}, n = {spec.n}."
        )
    if len(deltas) < MIN_SWEEP_LENGTH:
        raise PreconditionError(
            f"At least {MIN_SWEEP_LENGTH} deltas are needed, got {len(deltas)}."
        )
    if not is_strictly_increasing(-np.asarray(deltas, dtype=float)):
        raise PreconditionError("Deltas have to be strictly decreasing.")
    if min(deltas) < MIN_DELTA_CELLS * spec.h:
        raise PreconditionError(
            f"delta = {min(deltas)} is below the grid resolution, "
            f"at least {MIN_DELTA_CELLS} h = {MIN_DELTA_CELLS * spec.h} is required."
        )
    if spec.L < LogBump.psi.outer:
        raise PreconditionError(
            f"The grid half width {spec.L} does not cover the support radius "
            f"{LogBump.psi.outer}."
        )
    if not 0 < gamma_test < 1:
        raise PreconditionError(f"gamma_test has to be in (0, 1), got {gamma_test}.")


def _evaluate_sweep(
    sweep: SharpnessSweep, p: float, gamma_test: float, criteria: SharpnessCriteria
):
    log_deltas = np.abs(np.log(sweep.deltas))
    linf = sweep.column("linf")
    sobolev_power = sweep.column("sobolev") ** p
    ratio_gamma = sweep.column("ratio_gamma")
    ratio_sobolev_gamma = sweep.column("ratio_sobolev_gamma")
    expected_growth = float((log_deltas[-1] / log_deltas[0]) ** (1 - gamma_test))

    fits = {
        "linf_exponent": fit_growth_exponent(log_deltas, linf),
        "linf_log_slope": fit_log_slope(log_deltas, linf),
        "sobolev_power_exponent": fit_growth_exponent(log_deltas, sobolev_power),
        "sobolev_power_log_slope": fit_log_slope(log_deltas, sobolev_power),
        "bmo_spread": spread(sweep.column("bmo")),
        "k_alpha_spread": spread(sweep.column("k_alpha")),
        "ratio_1_spread": spread(sweep.column("ratio_1")),
        "ratio_sobolev_spread": spread(sweep.column("ratio_sobolev")),
        "gamma_growth": float(ratio_gamma[-1] / ratio_gamma[0]),
        "gamma_expected_growth": expected_growth,
        "gamma_required_growth": expected_growth**criteria.growth_fraction,
        "sobolev_gamma_growth": float(
            ratio_sobolev_gamma[-1] / ratio_sobolev_gamma[0]
        ),
    }

    low, high = criteria.linf_exponent
    sobolev_low, sobolev_high = criteria.sobolev_exponent
    checks = {
        "linf_exponent": low <= fits["linf_exponent"] <= high,
        "sobolev_power_exponent": sobolev_low
        <= fits["sobolev_power_exponent"]
        <= sobolev_high,
        "bmo_bounded": fits["bmo_spread"] <= criteria.max_spread,
        "k_alpha_bounded": fits["k_alpha_spread"] <= criteria.max_spread,
        "ratio_1_bounded": fits["ratio_1_spread"] <= criteria.max_spread,
        "ratio_sobolev_bounded": fits["ratio_sobolev_spread"] <= criteria.max_spread,
        "gamma_monotone": is_strictly_increasing(ratio_gamma),
        "gamma_diverges": fits["gamma_growth"] >= fits["gamma_required_growth"],
        "sobolev_gamma_monotone": is_strictly_increasing(ratio_sobolev_gamma),
    }
    for name, holds in checks.items():
        if not holds:
            logger.warning("Sharpness check %s failed", name)
    sweep.fits = fits
    sweep.checks = checks


def sharpness_sweep(
    deltas: Sequence[float],
    spec: GridSpec,
    s: float,
    p: float,
    eta: float,
    alpha: float,
    gamma_test: float = 0.5,
    exclusion: float | None = None,
    criteria: SharpnessCriteria | None = None,
    n_workers: int = 1,
    progress: bool = False,
) -> SharpnessSweep:
    """Evaluate both inequalities on LogBump(delta) for every delta.

    Parameters
    ----------
    deltas
        Strictly decreasing values of delta, the smallest at least 4 h.
    spec
        Grid the fields are sampled on, it has to cover the support B_{1/2}.
    s, p
        Sobolev order and exponent with s p = n.
    eta
        Hölder exponent in (0, 1).
    alpha
        Decay exponent in (0, n).
    gamma_test
        Exponent in (0, 1) the logarithm is lowered by in the divergence check.
    exclusion
        Diagonal exclusion radius of the Gagliardo sums.
    criteria
        Assertion thresholds.
    n_workers
        Number of worker processes, one delta per task.
    progress
        Show a progress bar.

    Returns
    -------
    sweep
    """
    deltas = [float(delta) for delta in deltas]
    _check_sweep_preconditions(deltas, spec, s, p, gamma_test)
    if not 0 < alpha < spec.n:
        raise PreconditionError(f"alpha has to be in (0, {spec.n}), got {alpha}.")
    criteria = SharpnessCriteria() if criteria is None else criteria

    row = partial(
        _sweep_row,
        spec=spec,
        s=s,
        p=p,
        eta=eta,
        alpha=alpha,
        gamma_test=gamma_test,
        exclusion=exclusion,
    )
    rows = map_blocks(row, deltas, n_workers, desc="Sharpness sweep", progress=progress)

    sweep = SharpnessSweep(
        deltas=deltas,
        rows=rows,
        params={
            "grid": spec.to_dict(),
            "s": s,
            "p": p,
            "eta": eta,
            "alpha": alpha,
            "gamma_test": gamma_test,
            "exclusion": exclusion,
            "criteria": asdict(criteria),
        },
    )
    _evaluate_sweep(sweep, p, gamma_test, criteria)
    logger.info(
        "Sharpness sweep over %d deltas: %s",
        len(deltas),
        "passed" if sweep.passed else "failed",
    )
    return sweep
