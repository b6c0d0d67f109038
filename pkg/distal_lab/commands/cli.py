"""Command-line entry point: ``distal-lab <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from ..models.config import (
    ConfigError,
    ExperimentConfig,
    LabSettings,
    load_experiment_config,
    load_settings,
    parse_experiment_config,
)
from ..reports import ReportError
from .experiments import emit_plotdata, run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# experiment-section keys that can be set from flags
SECTION_FLAGS: Dict[str, List[str]] = {
    "ergodicity": ["n", "starts", "base_modes", "fiber_limit", "threshold", "expect"],
    "perturb": [
        "mode",
        "target",
        "target2",
        "a",
        "b",
        "delta",
        "N",
        "seeds",
        "k_group",
        "gamma",
        "fiber",
        "k0_grid",
        "samples",
        "del_constant",
        "require",
    ],
    "lemmas": ["trials"],
    "tower": ["height", "eps", "interval", "dump"],
}
TOP_FLAGS = ["seed", "system", "group", "cocycle"]


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
    )


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML experiment file")
    parser.add_argument("--seed", type=int, help="root seed (u64)")
    parser.add_argument("--threads", type=int, help="worker threads (default DISTAL_LAB_THREADS)")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--log-level", help="logging level (default DISTAL_LAB_LOG_LEVEL)")


def _system_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", help='e.g. "rotation:golden", "odometer:20"')
    parser.add_argument("--group", help='e.g. "torus:1", "cyclic:2", "o2", "none"')
    parser.add_argument("--cocycle", help='e.g. "const:0", "identity-coord", "cells:[(0,0.5):1]"')


def register_ergodicity_command(subparsers) -> None:
    parser = subparsers.add_parser("ergodicity", help="Birkhoff-average ergodicity scores")
    _common(parser)
    _system_flags(parser)
    parser.add_argument("--n", type=int, action="append", help="orbit length (repeatable)")
    parser.add_argument("--starts", type=int)
    parser.add_argument("--base-modes", dest="base_modes", type=int)
    parser.add_argument("--fiber-limit", dest="fiber_limit", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--expect", choices=["ergodic", "non-ergodic", "none"])


def register_perturb_command(subparsers) -> None:
    parser = subparsers.add_parser("perturb", help="cocycle perturbation into U(C, a, c_a, g)")
    _common(parser)
    _system_flags(parser)
    parser.add_argument("--mode", choices=["simple", "relative"])
    parser.add_argument("--target", help='target g, e.g. "1/3"')
    parser.add_argument("--target2", help="second target g2 (relative mode)")
    parser.add_argument("--a", type=float)
    parser.add_argument("--b", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--N", type=int)
    parser.add_argument("--seeds", type=int)
    parser.add_argument("--k-group", dest="k_group")
    parser.add_argument("--gamma", help="K-valued extension cocycle literal")
    parser.add_argument("--fiber", choices=["point", "torus-identity", "torus-rotation"])
    parser.add_argument("--k0-grid", dest="k0_grid", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--del-constant", dest="del_constant", type=float)
    parser.add_argument("--require", choices=["all", "any"])


def register_lemmas_command(subparsers) -> None:
    parser = subparsers.add_parser("lemmas", help="Monte Carlo and exact lemma checks")
    _common(parser)
    parser.add_argument("--trials", type=int)


def register_tower_command(subparsers) -> None:
    parser = subparsers.add_parser("tower", help="build and dump a Rokhlin tower")
    _common(parser)
    _system_flags(parser)
    parser.add_argument("--height", type=int)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--interval", type=float, help="also profile first returns to [0, x)")
    parser.add_argument("--dump", action="store_true", default=None)


def register_plotdata_command(subparsers) -> None:
    parser = subparsers.add_parser("plotdata", help="two-column plot data from a report CSV")
    parser.add_argument("report", help="ergodicity or perturb report CSV")
    parser.add_argument("--out", help="plot-data file (default <report>.dat)")
    parser.add_argument("--log-level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distal-lab", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_ergodicity_command(subparsers)
    register_perturb_command(subparsers)
    register_lemmas_command(subparsers)
    register_tower_command(subparsers)
    register_plotdata_command(subparsers)
    return parser


def config_from_args(args: argparse.Namespace, settings: LabSettings) -> ExperimentConfig:
    """File config (when given) overlaid with every flag that was set on the command line."""
    if args.config:
        base = load_experiment_config(args.config)
        if base.kind != args.command:
            raise ConfigError(f"{args.config}: kind is {base.kind!r}, not {args.command!r}")
        data = base.model_dump(exclude_none=True)
    else:
        data = {"kind": args.command}
    for key in TOP_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    section = dict(data.get(args.command) or {})
    for key in SECTION_FLAGS[args.command]:
        value = getattr(args, key, None)
        if value is not None:
            section[key] = value
    data[args.command] = section
    if args.out:
        data["output"] = args.out
    else:
        data["output"] = str(Path(settings.output_dir) / data.get("output", "report.csv"))
    return parse_experiment_config(data, source=args.config or "<flags>")


async def async_main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings()
    except ConfigError as exc:
        print(f"distal-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(args.log_level or settings.log_level)

    try:
        if args.command == "plotdata":
            out = args.out or str(Path(args.report).with_suffix(".dat"))
            emit_plotdata(args.report, out)
            return EXIT_OK
        config = config_from_args(args, settings)
        threads = args.threads or settings.threads
        report = await run_experiment(config, threads)
    except (ConfigError, ReportError, ValueError) as exc:
        logger.error("%s", exc)
        print(f"distal-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.exception("%s experiment crashed", args.command)
        return EXIT_FAILED
    return EXIT_OK if report.passed else EXIT_FAILED


def main(argv: Optional[List[str]] = None) -> None:
    try:
        code = asyncio.run(async_main(argv))
    except KeyboardInterrupt:
        code = EXIT_FAILED
    sys.exit(code)


if __name__ == "__main__":
    main()
