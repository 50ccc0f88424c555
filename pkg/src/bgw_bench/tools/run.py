""" Batch runner for the logarithmic inequality experiments.

Example
--------
python src/bgw_bench/tools/run.py coeffs 2
python src/bgw_bench/tools/run.py identities --trials 1000 --seed 7
python src/bgw_bench/tools/run.py seminorm configs/seminorm.json --kind holder
python src/bgw_bench/tools/run.py bgw configs/bgw.json
python src/bgw_bench/tools/run.py sharpness configs/sharpness.json

Exit codes are 0 on success, 1 when a checked property fails and 2 on usage or
config errors. Results go to stdout and to the output files, logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys

from bgw_bench.coefficients import solve_dyadic_system
from bgw_bench.config import ExperimentConfig, load_config
from bgw_bench.errors import (
    ConfigError,
    DomainError,
    EstimatorError,
    PreconditionError,
)
from bgw_bench.reports import dumps, write_csv, write_json
from bgw_bench.seminorms import (
    SeminormKind,
    bmo_norm,
    holder_seminorm,
    sobolev_seminorm,
    weighted_sup_integral,
)
from bgw_bench.verification.inequality import (
    Theorem,
    check_bgw_bmo,
    check_bgw_sobolev,
)
from bgw_bench.verification.lemmas import run_identity_suite
from bgw_bench.verification.sharpness import sharpness_sweep

logger = logging.getLogger("bgw_bench")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
USAGE_ERRORS = (ConfigError, PreconditionError, DomainError, EstimatorError)


def _setup_logging(verbosity: int, quiet: bool):
    if quiet:
        level = logging.ERROR
    else:
        level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbosity, 2)]
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _load(path: str, command: str) -> tuple[dict, ExperimentConfig]:
    raw = load_config(path)
    config = ExperimentConfig.from_dict(raw)
    config.validate(command)
    return raw, config


def cmd_coeffs(args: argparse.Namespace) -> int:
    print(solve_dyadic_system(args.k))
    return EXIT_OK


def cmd_identities(args: argparse.Namespace) -> int:
    result = run_identity_suite(
        args.trials,
        args.seed,
        corrupt=args.corrupt_coefficients,
        progress=not args.quiet,
    )
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_FAILED


def cmd_seminorm(args: argparse.Namespace) -> int:
    raw = load_config(args.config)
    if args.kind is not None:
        raw["norms"] = {**(raw.get("norms") or {}), "kind": args.kind}
    config = ExperimentConfig.from_dict(raw)
    config.validate("seminorm")

    f = config.build_field()
    spec = config.grid_for(f)
    norms = config.norms
    if norms.kind == SeminormKind.BMO:
        report = bmo_norm(f, spec=spec, n_workers=config.workers)
    elif norms.kind == SeminormKind.HOLDER:
        report = holder_seminorm(f, norms.eta, spec, config.workers)
    elif norms.kind == SeminormKind.SOBOLEV:
        report = sobolev_seminorm(
            f,
            norms.s,
            norms.p,
            norms.exclusion,
            spec,
            norms.exterior,
            config.workers,
        )
    else:
        report = weighted_sup_integral(
            f, norms.alpha, spec=spec, n_workers=config.workers
        )

    print(dumps(report.to_dict()))
    write_json({"config": raw, "report": report}, config.output.report_path)
    write_csv([report.to_row()], config.output.table_path)
    return EXIT_OK


def cmd_bgw(args: argparse.Namespace) -> int:
    raw, config = _load(args.config, "bgw")
    f = config.build_field()
    spec = config.grid_for(f)
    norms = config.norms
    if config.mode == Theorem.BGW_BMO:
        report = check_bgw_bmo(
            f,
            norms.eta,
            norms.alpha,
            spec,
            chain=config.chain,
            n_workers=config.workers,
        )
    else:
        report = check_bgw_sobolev(
            f,
            norms.s,
            norms.p,
            norms.eta,
            norms.alpha,
            spec,
            norms.exclusion,
            chain=config.chain,
            n_workers=config.workers,
        )

    holds = report.chain_holds
    print(
        f"{report.theorem.value}: lhs = {report.lhs:.6g}, "
        f"core = {report.core_norm:.6g}, log argument = {report.log_arg:.6g}, "
        f"m0 = {report.m0}, ratio = {report.ratio:.6g}, "
        f"chain {'holds' if holds else 'fails'}"
    )
    write_json({"config": raw, "report": report}, config.output.report_path)
    write_csv([report.to_row()], config.output.table_path)
    if not holds:
        logger.warning("A step of the proof chain does not hold.")
    return EXIT_OK if holds else EXIT_FAILED


def cmd_sharpness(args: argparse.Namespace) -> int:
    raw, config = _load(args.config, "sharpness")
    norms = config.norms
    sweep = sharpness_sweep(
        config.sweep.deltas,
        config.grid,
        norms.s,
        norms.p,
        norms.eta,
        norms.alpha,
        config.sweep.gamma_test,
        norms.exclusion,
        config.sweep.criteria,
        n_workers=config.workers,
        progress=not args.quiet,
    )

    for name, holds in sweep.checks.items():
        print(f"{name}: {'pass' if holds else 'FAIL'}")
    print(f"{sum(sweep.checks.values())}/{len(sweep.checks)} checks pass")
    write_json({"config": raw, "sweep": sweep}, config.output.report_path)
    write_csv(sweep.to_frame(), config.output.table_path)
    return EXIT_OK if sweep.passed else EXIT_FAILED


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Workbench for logarithmic L-infinity inequalities."
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="Only errors, no progress bars"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    coeffs = commands.add_parser("coeffs", help="Print the dyadic coefficients")
    coeffs.add_argument("k", type=int, help="Order of the coefficient system")
    coeffs.set_defaults(func=cmd_coeffs)

    identities = commands.add_parser(
        "identities", help="Run the exact identity suites"
    )
    identities.add_argument("--trials", type=_positive_int, default=1000)
    identities.add_argument("--seed", type=int, default=0)
    identities.add_argument(
        "--corrupt-coefficients", action="store_true", help=argparse.SUPPRESS
    )
    identities.set_defaults(func=cmd_identities)

    seminorm = commands.add_parser("seminorm", help="Estimate one seminorm")
    seminorm.add_argument("config", type=str, help="Path to the configuration file")
    seminorm.add_argument(
        "--kind", choices=[kind.value for kind in SeminormKind], default=None
    )
    seminorm.set_defaults(func=cmd_seminorm)

    bgw = commands.add_parser("bgw", help="Evaluate one inequality for one field")
    bgw.add_argument("config", type=str, help="Path to the configuration file")
    bgw.set_defaults(func=cmd_bgw)

    sharpness = commands.add_parser("sharpness", help="Run the LogBump sweep")
    sharpness.add_argument("config", type=str, help="Path to the configuration file")
    sharpness.set_defaults(func=cmd_sharpness)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    _setup_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except USAGE_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
