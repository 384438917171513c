"""CLI entry point for multiplier-lab."""

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from multiplier_lab.analysis.exceptions import AnalysisError
from multiplier_lab.cli.exceptions import ConfigError
from multiplier_lab.config import load_config_file
from multiplier_lab.core.exceptions import GridError
from multiplier_lab.operators.exceptions import OperatorError
from multiplier_lab.systems.exceptions import SystemsError

# Exit codes
EXIT_SUCCESS = 0
EXIT_UNEXPECTED = 1
EXIT_VERDICT_FAILED = 2
EXIT_PRECONDITION = 3
EXIT_CONFIG = 64
EXIT_KEYBOARD_INTERRUPT = 130

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

SUBCOMMANDS = {
    "transform": "Grid round trips, Parseval and w_β truncation error",
    "sobolev": "Seminorms of a named construction or of CSV samples",
    "multnorm": "Scalar and matrix multiplier norm estimates",
    "tau-scan": "Obstruction verdicts of the τ-scan for w_β",
    "construct": "Emit samples of w_β, h_β or F_β",
    "zak": "Zak transform checks and min |Zg| under refinement",
    "gabor-blt": "Localization verdicts against the BLT exponents",
    "gramian": "Gramian ranks, extra invariance and eigenvalue checks",
    "sis-diagnostic": "Weighted (C_q) diagnostic of a shift-invariant system",
    "zeroset": "Generalized zero set, Hausdorff obstruction and Poincaré ratios",
    "fit": "Re-fit and classify a stored series",
}

# keys the global config section may set
_GLOBAL_KEYS = frozenset({"seed", "workers", "out"})

logger = logging.getLogger(__name__)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Key-value config file")
    common.add_argument("--out", type=Path, help="Output directory (default: runs)")
    common.add_argument("--seed", type=int, help="Random seed (default: 0xC0FFEE)")
    common.add_argument("--workers", type=int, help="Worker threads for the kernels")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one subcommand setting (repeatable)",
    )
    common.add_argument("--verbose", action="store_true", help="Enable debug logging")
    common.add_argument(
        "--dry-run", action="store_true", help="Print the resolved config and exit"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """Build and return the argument parser."""
    parser = argparse.ArgumentParser(
        prog="multiplier-lab",
        description="Numerical lab for Fourier multipliers, Sobolev scales and "
        "shift-invariant systems",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="subcommand", required=True)
    common = _common_options()
    for name, help_text in SUBCOMMANDS.items():
        subparsers.add_parser(name, help=help_text, description=help_text, parents=[common])
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    parsed = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got '{pair}'")
        parsed[key.strip()] = value.strip()
    return parsed


def resolve_config(args: argparse.Namespace) -> Any:
    """Merge file sections, ``--set`` overrides and flags, then validate.

    Precedence, lowest first: the global file section, the subcommand's file
    section, ``--set`` pairs, the dedicated flags.

    Raises:
        ConfigError: On an unknown section or key, or a value that fails validation.
        FileNotFoundError: If ``--config`` names a missing file.
    """
    from multiplier_lab.cli.commands import COMMANDS, section_name

    command = COMMANDS[args.command]
    raw: dict[str, Any] = {}
    if args.config is not None:
        sections = load_config_file(args.config)
        known = {section_name(name) for name in COMMANDS} | {""}
        unknown = sorted(set(sections) - known)
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(unknown)}")
        global_section = sections.get("", {})
        stray = sorted(set(global_section) - _GLOBAL_KEYS)
        if stray:
            raise ConfigError(
                f"global config keys must be one of {sorted(_GLOBAL_KEYS)}, got {stray}"
            )
        raw.update(global_section)
        raw.update(sections.get(section_name(args.command), {}))
    raw.update(_parse_overrides(args.overrides))
    for key in ("out", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value

    try:
        return command.config_model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid {args.command} config:\n{exc}") from exc


def print_summary(command: str, passed: bool, written: list[Path]) -> None:
    """Print a short human-readable run summary."""
    print(f"{command}: {'passed' if passed else 'FAILED'}")
    for path in written:
        print(f"  {path}")


def _handle_error(label: str, exc: BaseException, verbose: bool, exit_code: int) -> int:
    """Print error message to stderr and return the exit code."""
    print(f"{label}: {exc}", file=sys.stderr)
    if verbose:
        traceback.print_exc(file=sys.stderr)
    return exit_code


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point.

    Args:
        argv: Command-line arguments (defaults to sys.argv[1:]).

    Returns:
        Exit code integer.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; usage errors map to the config exit code
        return EXIT_SUCCESS if exc.code in (0, None) else EXIT_CONFIG

    configure_logging(args.verbose)

    try:
        config = resolve_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        return _handle_error("Config error", exc, args.verbose, EXIT_CONFIG)

    if args.dry_run:
        print(json.dumps(config.model_dump(mode="json"), indent=2))
        return EXIT_SUCCESS

    try:
        from multiplier_lab.cli.artifacts import write_run
        from multiplier_lab.cli.commands import COMMANDS

        logger.debug("running %s with %s", args.command, config)
        result = COMMANDS[args.command].runner(config)
        written = write_run(
            config.out,
            args.command,
            config,
            result.passed,
            result.results,
            result.series,
            result.tables,
        )
        print_summary(args.command, result.passed, written)
        return EXIT_SUCCESS if result.passed else EXIT_VERDICT_FAILED

    except (ConfigError, ValidationError) as exc:
        # models built from config values (grids, balls) validate late
        return _handle_error("Config error", exc, args.verbose, EXIT_CONFIG)

    except (GridError, AnalysisError, OperatorError, SystemsError) as exc:
        return _handle_error("Precondition error", exc, args.verbose, EXIT_PRECONDITION)

    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        return EXIT_KEYBOARD_INTERRUPT

    except Exception as exc:
        return _handle_error("Unexpected error", exc, args.verbose, EXIT_UNEXPECTED)
