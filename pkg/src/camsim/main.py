#!/usr/bin/env python3
"""
camsim - Main Entry Point

Command-line surface of the simulator: device and single-word demos, the
seeded experiment pipelines and the built-in oracle checks.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv
from rich.console import Console

from . import __version__
from .cli_interface import show_help_summary
from .config import ModelMode, Scheme, load_config, resolve_run
from .errors import CamSimError, ConfigError, DomainError
from .models.array_core import parse_bits
from .workflow import run_workflow

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

MODEL_CHOICES = {
    "closed-form": ModelMode.CLOSED_FORM,
    "table": ModelMode.TABLE_TRANSIENT,
    "physical": ModelMode.PHYSICAL_TRANSIENT,
}
SCHEME_CHOICES = {"td": [Scheme.TD], "vd": [Scheme.VD], "both": [Scheme.TD, Scheme.VD]}


class CamSimArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config-error status."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _bits(text: str):
    try:
        return parse_bits(text)
    except DomainError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON config file")
    common.add_argument("--seed", type=_seed, default=None, help="Seed (overrides config)")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="Data file format")
    common.add_argument(
        "--model", choices=sorted(MODEL_CHOICES), default=None, help="TD delay model"
    )
    common.add_argument(
        "--threads", type=_positive_int, default=None, help="Worker threads (default: all cores)"
    )
    common.add_argument("--debug", action="store_true", help="Enable debug logging")

    parser = CamSimArgumentParser(
        prog="camsim",
        description="Behavioral simulator for ferroelectric memcapacitor time-domain CAM",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
💡 TIP: Use --show-commands for an overview with examples!
💡 TIP: CAMSIM_SEED (environment or .env) is the lowest-priority seed source
        """,
    )
    parser.add_argument("--version", action="version", version=f"camsim {__version__}")
    parser.add_argument(
        "--show-commands", action="store_true", help="Show available commands and examples"
    )
    sub = parser.add_subparsers(dest="command", parser_class=CamSimArgumentParser)

    cv = sub.add_parser("cv-curve", parents=[common], help="Export C-V samples")
    cv.add_argument("--v-min", type=float, default=-6.0, help="Lowest gate-S/D voltage")
    cv.add_argument("--v-max", type=float, default=6.0, help="Highest gate-S/D voltage")
    cv.add_argument("--points", type=int, default=241, help="Grid points")

    for name, help_text in (
        ("write", "Program a word with the write pulses"),
        ("search-word", "Search stored rows with one query"),
    ):
        word = sub.add_parser(name, parents=[common], help=help_text)
        source = word.add_mutually_exclusive_group(required=True)
        source.add_argument("--stored", type=_bits, help="Stored bits, e.g. 1011")
        source.add_argument("--array", type=Path, help="Bit-row file, one word per line")
        if name == "search-word":
            word.add_argument("--query", type=_bits, required=True, help="Query bits")
            word.add_argument(
                "--waveform", action="store_true", help="Export the first row's ML waveform"
            )

    sub.add_parser("sweep-hd", parents=[common], help="Nominal delay vs HD with fit")
    for name, help_text in (
        ("monte-carlo", "Delay distributions per HD"),
        ("nn-search", "Nearest-neighbour search accuracy"),
    ):
        experiment = sub.add_parser(name, parents=[common], help=help_text)
        experiment.add_argument(
            "--scheme", choices=sorted(SCHEME_CHOICES), default=None, help="Readout scheme"
        )
    sub.add_parser("area-report", parents=[common], help="Published cell areas")
    sub.add_parser("validate", parents=[common], help="Run the oracle checks")
    return parser


def run_cli(argv: Optional[Sequence[str]] = None, console: Optional[Console] = None) -> int:
    """
    Parse arguments, run one command and map the outcome to an exit status.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])
        console: Console for command output

    Returns:
        0 on success, 1 on config or usage errors, 2 on runtime failures
        or failed checks
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    if args.show_commands:
        show_help_summary(console)
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    try:
        context = resolve_run(load_config(args.config), cli_seed=args.seed)
    except ConfigError as e:
        print(f"❌ Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    scheme = getattr(args, "scheme", None)
    options = {
        key: getattr(args, key)
        for key in ("v_min", "v_max", "points", "stored", "array", "query", "waveform")
        if hasattr(args, key)
    }
    try:
        outcome = run_workflow(
            args.command,
            context,
            args.out,
            fmt=args.format,
            mode=MODEL_CHOICES[args.model] if args.model else None,
            schemes=SCHEME_CHOICES[scheme] if scheme else None,
            threads=args.threads,
            debug=args.debug,
            console=console,
            **options,
        )
    except ConfigError as e:
        print(f"❌ Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CamSimError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    return EXIT_OK if outcome["passed"] else EXIT_RUNTIME


def main() -> None:
    """Console script entry point."""
    load_dotenv()
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
