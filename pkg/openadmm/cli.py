"""
Command line front end.

Human readable logs go to stderr, machine readable rows to stdout.

Exit codes:
    0  success
    1  an oracle residual exceeded its tolerance
    2  invalid configuration, scenario or bound parameters
    3  any other failure while running
"""

from __future__ import annotations
import typing as t
import argparse
import csv
import logging
import os
import sys

from dataclasses import replace

from .analysis import BoundInputs, consensus_bound
from .errors import BoundError, ConfigError, OpenAdmmError
from .experiments import (
    SCALES, SCENARIO_IDS, SUMMARY_HEADER, ScenarioConfig,
    builtin_scenario, load_config, run_and_summarize, summary_rows, to_ini
)
from .reference_oracles import run_oracle_suite

_log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ORACLE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

OUT_DIR_ENV = "OPENADMM_OUT_DIR"
_DEFAULT_OUT_DIR = "runs"

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _configure_logging(verbosity: int) -> None:
    root = logging.getLogger("openadmm")
    for handler in [h for h in root.handlers if getattr(h, "_openadmm_cli", False)]:
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    handler._openadmm_cli = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG)


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", choices=SCENARIO_IDS, help="builtin scenario id")
    source.add_argument("--config", help="path to an INI scenario file")
    parser.add_argument("--scale", choices=SCALES, default=None, help="builtin scale (default: desk)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openadmm", description="Open ADMM simulator for networks with joining and leaving agents")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr; repeat for debug")
    parser.add_argument("--silent", action="store_true", help="hide progress bars")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario and write traces and a summary")
    _add_source(run)
    run.add_argument("--seed", type=_non_negative, default=None, help="base seed of every repetition")
    run.add_argument("--out", default=None, help=f"output directory (default: ${OUT_DIR_ENV} or ./{_DEFAULT_OUT_DIR})")
    run.add_argument("--reps", type=_positive, default=None, help="Monte Carlo repetitions")
    run.add_argument("--horizon", type=_positive, default=None, help="ticks per repetition")
    run.add_argument("--workers", type=_positive, default=None, help="worker processes (default: all cores)")

    validate = commands.add_parser("validate", help="parse a scenario and print its canonical INI")
    _add_source(validate)

    commands.add_parser("list-scenarios", help="print the builtin scenario ids")

    oracle = commands.add_parser("oracle-check", help="cross-check the engine against the reference oracles")
    oracle.add_argument("--n", type=_positive, default=8, help="largest network size")
    oracle.add_argument("--ticks", type=_positive, default=20)
    oracle.add_argument("--trials", type=_positive, default=100)
    oracle.add_argument("--seed", type=_non_negative, default=0)
    oracle.add_argument("--alpha", type=float, default=0.99)
    oracle.add_argument("--rho", type=float, default=0.5)
    oracle.add_argument("--prox-samples", type=_positive, default=2000)

    bound = commands.add_parser("bound", help="print the rate, radius and consensus bound")
    bound.add_argument("--gamma", type=float, default=0.0)
    bound.add_argument("--beta", type=float, default=1.0)
    bound.add_argument("--rho", type=float, default=0.5)
    bound.add_argument("--sigma", type=float, default=0.2)
    bound.add_argument("--omega", type=float, default=5.0)
    bound.add_argument("--n", type=_positive, default=1)
    return parser


def _resolve(args: argparse.Namespace) -> ScenarioConfig:
    if args.scenario is not None:
        return builtin_scenario(args.scenario, args.scale or "desk")
    config = load_config(args.config)
    if args.scale is not None and args.scale != config.scale:
        _log.warning("--scale %s ignored for config files; the file says %s", args.scale, config.scale)
    return config


def _writer() -> t.Any:
    return csv.writer(sys.stdout, lineterminator="\n")


def _cmd_run(args: argparse.Namespace) -> int:
    config = _resolve(args)
    overrides = {
        name: value for name, value in (("seed", args.seed), ("reps", args.reps), ("horizon", args.horizon))
        if value is not None
    }
    if overrides:
        config = replace(config, run=replace(config.run, **overrides))
    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or _DEFAULT_OUT_DIR

    result = run_and_summarize(config, out_dir, workers=args.workers, silent=args.silent)
    writer = _writer()
    writer.writerow(SUMMARY_HEADER)
    writer.writerows(summary_rows(config, result.summaries))
    _log.info("traces and summary written under %s", result.out_dir)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _resolve(args)
    config.validate()
    sys.stdout.write(to_ini(config))
    return EXIT_OK


def _cmd_list(args: argparse.Namespace) -> int:
    for scenario_id in SCENARIO_IDS:
        print(scenario_id)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    report = run_oracle_suite(
        n_max=args.n, ticks=args.ticks, trials=args.trials, seed=args.seed,
        alpha=args.alpha, rho=args.rho, prox_samples=args.prox_samples,
    )
    writer = _writer()
    writer.writerow(("check", "residual", "tolerance", "passed"))
    for name, residual in report.residuals.items():
        tolerance = report.tolerances[name]
        writer.writerow((name, repr(residual), repr(tolerance), str(residual <= tolerance).lower()))
    if not report.passed:
        name = report.failures[0]
        print(f"oracle check failed: {name} residual {report.residuals[name]:.3e} > {report.tolerances[name]:.0e}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def _cmd_bound(args: argparse.Namespace) -> int:
    inputs = BoundInputs.from_signals(args.gamma, args.beta, args.rho, args.sigma, args.omega)
    writer = _writer()
    writer.writerow(("theta", "radius", "delta"))
    writer.writerow((repr(inputs.theta), repr(inputs.radius), repr(consensus_bound(inputs, args.n))))
    return EXIT_OK


_COMMANDS: dict[str, t.Callable[[argparse.Namespace], int]] = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "list-scenarios": _cmd_list,
    "oracle-check": _cmd_oracle,
    "bound": _cmd_bound,
}


def main(argv: t.Sequence[str] | None = None) -> int:
    """Parses `argv` and runs one subcommand, returning its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)

    _configure_logging(args.verbose)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, BoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OpenAdmmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
