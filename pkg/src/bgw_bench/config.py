from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from bgw_bench.coefficients import parse_fraction
from bgw_bench.errors import ConfigError, DomainError, PreconditionError
from bgw_bench.fields import (
    Field,
    GridField,
    GridSpec,
    LogBump,
    analytic_field_from_dict,
)
from bgw_bench.load import load_grid_field
from bgw_bench.parallel import resolve_workers
from bgw_bench.seminorms import SeminormKind
from bgw_bench.utils import is_strictly_increasing
from bgw_bench.verification.inequality import CRITICAL_TOLERANCE, Theorem
from bgw_bench.verification.sharpness import (
    MIN_DELTA_CELLS,
    MIN_SWEEP_LENGTH,
    SharpnessCriteria,
)

logger = logging.getLogger(__name__)

COMMANDS = ("seminorm", "bgw", "sharpness")
MODES = {"bmo": Theorem.BGW_BMO, "sobolev": Theorem.BGW_SOBOLEV}
TEXT_FIELD_KEYS = ("family", "target", "coeffs", "terms")


def load_config(path: str) -> dict:
    """Read a YAML or JSON experiment config."""
    if not os.path.isfile(path):
        raise ConfigError(f"Config file {path} does not exist.")
    try:
        with open(path) as stream:
            config = yaml.safe_load(stream)
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML or JSON: {e}")

    if not isinstance(config, dict):
        raise ConfigError(f"Config file {path} does not contain a mapping.")
    return config


def _number(value: Any, name: str) -> float:
    try:
        if isinstance(value, str):
            return float(parse_fraction(value))
        return float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"{name} has to be a number or a 'p/q' string, got {value}.")


def _optional_number(data: dict, key: str, section: str) -> float | None:
    if data.get(key) is None:
        return None
    return _number(data[key], f"{section}.{key}")


@dataclass
class NormParams:
    eta: float | None = None
    alpha: float | None = None
    s: float | None = None
    p: float | None = None
    exclusion: float | None = None
    exterior: bool = True
    kind: SeminormKind | None = None

    @classmethod
    def from_dict(cls, data: dict) -> NormParams:
        kind = data.get("kind")
        try:
            kind = None if kind is None else SeminormKind(kind)
        except ValueError:
            kinds = [k.value for k in SeminormKind]
            raise ConfigError(f"norms.kind has to be one of {kinds}, got {kind}.")
        return cls(
            **{
                key: _optional_number(data, key, "norms")
                for key in ("eta", "alpha", "s", "p", "exclusion")
            },
            exterior=bool(data.get("exterior", True)),
            kind=kind,
        )


@dataclass
class SweepParams:
    deltas: list[float] = field(default_factory=list)
    gamma_test: float = 0.5
    criteria: SharpnessCriteria = field(default_factory=SharpnessCriteria)

    @classmethod
    def from_dict(cls, data: dict) -> SweepParams:
        if "deltas" in data:
            deltas = [_number(d, "sweep.deltas") for d in data["deltas"]]
        elif "log2_deltas" in data:
            deltas = [2.0 ** int(e) for e in data["log2_deltas"]]
        else:
            raise ConfigError("sweep needs either deltas or log2_deltas.")
        try:
            criteria = SharpnessCriteria.from_dict(data.get("criteria", {}))
        except TypeError as e:
            raise ConfigError(f"Invalid sweep.criteria: {e}")
        return cls(
            deltas=deltas,
            gamma_test=_number(data.get("gamma_test", 0.5), "sweep.gamma_test"),
            criteria=criteria,
        )


@dataclass
class OutputParams:
    dir: str = "output"
    report: str = "report.json"
    table: str = "sweep.csv"

    @property
    def report_path(self) -> str:
        return os.path.join(self.dir, self.report)

    @property
    def table_path(self) -> str:
        return os.path.join(self.dir, self.table)


def _output_params(data: dict) -> OutputParams:
    try:
        return OutputParams(**data)
    except TypeError as e:
        raise ConfigError(f"Invalid output section: {e}")


@dataclass
class ExperimentConfig:
    """Typed experiment config.

    Sections: `field` (kept as `field_config`: an analytic family with its
    parameters, or the `path` of a stored grid field), `grid`, `norms`, `mode`
    ("bmo" or "sobolev"), `sweep`, `output`, `workers`, `seed` and `chain`. Stored
    fields may set `dimension` next to `path`, it defaults to 1.
    """

    field_config: dict | None = None
    grid: GridSpec | None = None
    norms: NormParams = field(default_factory=NormParams)
    mode: Theorem = Theorem.BGW_BMO
    sweep: SweepParams | None = None
    output: OutputParams = field(default_factory=OutputParams)
    workers: int = 1
    seed: int = 0
    chain: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        unknown = set(data) - {
            "field",
            "grid",
            "norms",
            "mode",
            "sweep",
            "output",
            "workers",
            "seed",
            "chain",
        }
        if unknown:
            raise ConfigError(f"Unknown config sections {sorted(unknown)}.")

        grid = None
        if data.get("grid") is not None:
            try:
                grid = GridSpec(
                    int(data["grid"]["n"]),
                    _number(data["grid"]["L"], "grid.L"),
                    _number(data["grid"]["h"], "grid.h"),
                )
            except KeyError as e:
                raise ConfigError(f"grid misses the key {e}.")
            except DomainError as e:
                raise ConfigError(f"Invalid grid: {e}")

        mode = data.get("mode", "bmo")
        if mode not in MODES:
            raise ConfigError(f"mode has to be one of {list(MODES)}, got {mode}.")

        workers = data.get("workers", 1)
        if workers is not None and (not isinstance(workers, int) or workers < 1):
            raise ConfigError(f"workers has to be a positive integer, got {workers}.")

        return cls(
            field_config=data.get("field"),
            grid=grid,
            norms=NormParams.from_dict(data.get("norms") or {}),
            mode=MODES[mode],
            sweep=None
            if data.get("sweep") is None
            else SweepParams.from_dict(data["sweep"]),
            output=_output_params(data.get("output") or {}),
            workers=resolve_workers(workers),
            seed=int(data.get("seed", 0)),
            chain=bool(data.get("chain", True)),
        )

    @property
    def dimension(self) -> int:
        if self.grid is not None:
            return self.grid.n
        if self.field_config is not None:
            return int(self.field_config.get("dimension", 1))
        return 1

    def build_field(self) -> Field:
        """Return the configured field, analytic or loaded from a file."""
        if self.field_config is None:
            raise ConfigError("The config has no field section.")
        if "path" in self.field_config:
            return load_grid_field(self.field_config["path"])
        data = {
            key: _number(value, f"field.{key}")
            if isinstance(value, str) and key not in TEXT_FIELD_KEYS
            else value
            for key, value in self.field_config.items()
        }
        try:
            return analytic_field_from_dict(data)
        except (KeyError, TypeError) as e:
            raise ConfigError(f"Invalid field description {self.field_config}: {e}")

    def _require(self, section: str, **values):
        missing = [name for name, value in values.items() if value is None]
        if missing:
            raise ConfigError(f"{section} misses {missing}.")

    def _validate_exponents(self):
        norms = self.norms
        n = self.dimension
        self._require("norms", eta=norms.eta, alpha=norms.alpha)
        if not 0 < norms.eta < 1:
            raise PreconditionError(f"eta has to be in (0, 1), got {norms.eta}.")
        if not 0 < norms.alpha < n:
            raise PreconditionError(f"alpha has to be in (0, {n}), got {norms.alpha}.")

    def _validate_critical(self):
        norms = self.norms
        self._require("norms", s=norms.s, p=norms.p)
        if norms.s <= 0 or norms.p < 1:
            raise PreconditionError(
                f"Expected s > 0 and p >= 1, got s={norms.s}, p={norms.p}."
            )
        if abs(norms.s * norms.p - self.dimension) > CRITICAL_TOLERANCE:
            raise PreconditionError(
                f"sp = n is required, got s * p = {norms.s * norms.p}, "
                f"n = {self.dimension}."
            )

    def _validate_field(self):
        if self.field_config is None:
            raise ConfigError("The config has no field section.")
        if "path" not in self.field_config:
            if "family" not in self.field_config:
                raise ConfigError("field needs either family or path.")
            if self.grid is None:
                raise ConfigError("Analytic fields need a grid section.")
            if int(self.field_config.get("dimension", 1)) != self.grid.n:
                raise ConfigError(
                    f"Field dimension {self.field_config.get('dimension', 1)} "
                    f"does not match grid dimension {self.grid.n}."
                )

    def _validate_sweep(self):
        if self.sweep is None:
            raise ConfigError("The sharpness command needs a sweep section.")
        if self.grid is None:
            raise ConfigError("The sharpness command needs a grid section.")
        deltas = self.sweep.deltas
        if len(deltas) < MIN_SWEEP_LENGTH:
            raise PreconditionError(
                f"At least {MIN_SWEEP_LENGTH} deltas are needed, got {len(deltas)}."
            )
        if not is_strictly_increasing(-np.asarray(deltas)):
            raise PreconditionError("Deltas have to be strictly decreasing.")
        if min(deltas) < MIN_DELTA_CELLS * self.grid.h:
            raise PreconditionError(
                f"delta = {min(deltas)} is below the grid resolution "
                f"{MIN_DELTA_CELLS} h = {MIN_DELTA_CELLS * self.grid.h}."
            )
        if max(deltas) >= 0.25:
            raise PreconditionError(f"Deltas have to be below 1/4, got {max(deltas)}.")
        if self.grid.L < LogBump.psi.outer:
            raise PreconditionError(
                f"The grid half width {self.grid.L} does not cover the support "
                f"radius {LogBump.psi.outer}."
            )
        if not 0 < self.sweep.gamma_test < 1:
            raise PreconditionError(
                f"gamma_test has to be in (0, 1), got {self.sweep.gamma_test}."
            )

    def validate(self, command: str):
        """Check every precondition of `command` before anything is computed.

        Raises
        ------
        ConfigError
            A required section or parameter is missing.
        PreconditionError
            The parameters violate a precondition of the command.
        """
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command {command}.")

        if command == "sharpness":
            self._validate_exponents()
            self._validate_critical()
            self._validate_sweep()
            return

        self._validate_field()
        if command == "bgw":
            self._validate_exponents()
            if self.mode == Theorem.BGW_SOBOLEV:
                self._validate_critical()
            return

        norms = self.norms
        kind = norms.kind
        if kind is None:
            raise ConfigError("The seminorm command needs norms.kind.")
        if kind == SeminormKind.HOLDER:
            self._require("norms", eta=norms.eta)
            if not 0 < norms.eta < 1:
                raise PreconditionError(f"eta has to be in (0, 1), got {norms.eta}.")
        elif kind == SeminormKind.SOBOLEV:
            self._require("norms", s=norms.s, p=norms.p)
            if norms.s <= 0 or norms.p < 1:
                raise PreconditionError(
                    f"Expected s > 0 and p >= 1, got s={norms.s}, p={norms.p}."
                )
        elif kind == SeminormKind.WEIGHTED_SUP:
            self._require("norms", alpha=norms.alpha)
            if norms.alpha <= 0:
                raise PreconditionError(f"alpha has to be positive, got {norms.alpha}.")

    def grid_for(self, f: Field) -> GridSpec | None:
        """Return the grid the estimators run on for a built field."""
        if isinstance(f, GridField):
            return f.spec
        return self.grid
