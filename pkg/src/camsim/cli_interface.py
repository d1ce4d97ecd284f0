"""Console rendering for the command line interface."""

import math
from pathlib import Path
from textwrap import dedent
from typing import Optional, Sequence

import pandas as pd
from rich.box import ROUNDED
from rich.console import Console
from rich.panel import Panel
from rich.rule import Rule
from rich.table import Table

from .config import Scheme
from .experiments import (
    AreaEntry,
    HdSweepResult,
    MonteCarloResult,
    NnSearchResult,
    ValidationCheck,
)


def show_help_summary(console: Optional[Console] = None) -> None:
    """Print a summary of the available CLI commands."""
    help_text = dedent(
        """
        🔬 camsim - Ferroelectric Memcapacitor TD CAM Simulator
        ========================================================

        📐 DEVICE & WORD:
        cv-curve           Export C-V samples for both polarization states
        write              Program a word (or a bit-row file) with the write pulses
        search-word        Search stored rows, report TD/VD delays and estimated HD

        📈 EXPERIMENTS:
        sweep-hd           Nominal delay vs HD with the affine calibration fit
        monte-carlo        Delay distributions per HD (--scheme td|vd|both)
        nn-search          Nearest-neighbour search accuracy over a random array
        area-report        Published cell areas and ratios
        validate           Truth-table, integrator and HD-oracle checks

        🔧 COMMON OPTIONS:
        --config PATH      JSON config (unknown keys are rejected)
        --seed N           Seed, overrides the config and CAMSIM_SEED
        --out DIR          Output directory (default: out)
        --format FMT       csv or json data files
        --model MODEL      closed-form, table or physical
        --threads N        Worker threads for Monte Carlo trials
        --debug            Enable debug logging

        💡 EXAMPLES:
        camsim sweep-hd --model table --out out/
        camsim monte-carlo --scheme both --seed 42
        camsim search-word --stored 1011 --query 1001 --waveform
        camsim area-report --format json
        """
    )
    (console or Console()).print(help_text.strip())


def _seconds(value: float) -> str:
    if not math.isfinite(value):
        return "no event"
    return f"{value * 1e12:.2f} ps" if value < 1e-9 else f"{value * 1e9:.3f} ns"


def render_sweep(console: Console, result: HdSweepResult) -> None:
    table = Table(show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("HD", style="cyan", justify="right")
    table.add_column("Delay", style="green", justify="right")
    table.add_column("Converged", style="blue")
    for (hd, delay), converged in zip(result.points, result.converged):
        table.add_row(str(hd), _seconds(delay), "✅" if converged else "⚠️")
    console.print(table)

    cal = result.calibration
    console.print(
        Panel(
            f"delay = {_seconds(cal.intercept)} + {_seconds(cal.slope)} × HD\n"
            f"r² = {cal.r_squared:.12f}",
            title=f"📈 Calibration ({result.model_mode.value})",
            border_style="green",
        )
    )


def render_monte_carlo(console: Console, results: Sequence[MonteCarloResult]) -> None:
    for result in results:
        console.print(Rule(f"🎲 {result.scheme.value} Monte Carlo", style="cyan"))
        pair_z = dict(result.margin.per_adjacent_pair) if result.margin else {}
        by_hd = {dist.hd: dist for dist in result.distributions}

        table = Table(show_header=True, header_style="bold magenta", box=ROUNDED)
        for column in ("HD", "Mean", "Std", "Accuracy", "z to next"):
            table.add_column(column, justify="right")
        for hd in result.hd_list:
            dist = by_hd.get(hd)
            z = pair_z.get(hd)
            table.add_row(
                str(hd),
                _seconds(dist.mean) if dist else "no event",
                _seconds(dist.std) if dist else "-",
                f"{result.accuracy_at(hd):.4f}",
                "-" if z is None else ("inf" if math.isinf(z) else f"{z:.3f}"),
            )
        console.print(table)
        if result.scheme is Scheme.VD:
            console.print(f"  match flags at HD 0: {result.match_flags}")


def render_nn(console: Console, results: Sequence[NnSearchResult]) -> None:
    table = Table(show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("Scheme", style="cyan")
    table.add_column("Correct", justify="right")
    table.add_column("Accuracy", style="green", justify="right")
    for result in results:
        table.add_row(
            result.scheme.value, f"{result.correct}/{len(result.trials)}", f"{result.accuracy:.4f}"
        )
    console.print(table)


def render_area(console: Console, entries: Sequence[AreaEntry]) -> None:
    table = Table(show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("Structure", style="cyan")
    table.add_column("Area (F²)", justify="right")
    table.add_column("Ratio", style="green", justify="right")
    for entry in entries:
        table.add_row(entry.structure_name, f"{entry.area_f2:g}", f"{entry.ratio_vs_this_work:.2f}×")
    console.print(table)


def render_validation(console: Console, checks: Sequence[ValidationCheck]) -> None:
    table = Table(show_header=True, header_style="bold magenta", box=ROUNDED)
    table.add_column("Check", style="cyan")
    table.add_column("Status")
    table.add_column("Detail", style="dim")
    for check in checks:
        table.add_row(check.name, "✅ pass" if check.passed else "❌ FAIL", check.detail)
    console.print(table)


def render_frame(console: Console, frame: pd.DataFrame, title: str, limit: int = 20) -> None:
    """Print the head of a data table."""
    table = Table(title=title, show_header=True, header_style="bold magenta", box=ROUNDED)
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame.head(limit).itertuples(index=False):
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row))
    console.print(table)
    if len(frame) > limit:
        console.print(f"  … {len(frame) - limit} more row(s)", style="dim")


def render_files(console: Console, paths: Sequence[Path]) -> None:
    console.print(
        Panel(
            "\n".join(f"📄 {path}" for path in paths),
            title="💾 Outputs",
            border_style="blue",
        )
    )
