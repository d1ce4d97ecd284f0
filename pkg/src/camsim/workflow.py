"""
Workflow Module for the CAM simulator

Runs one CLI command end to end: executes it against a resolved config,
writes the data tables and summary.json, and prints a console summary.
"""

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from rich.console import Console

from . import cli_interface as ui
from .config import ModelMode, RunContext, Scheme
from .errors import ConfigError, ConvergenceError, DomainError
from .experiments import (
    ExperimentRunner,
    scheme_delay,
    sweep_word,
)
from .io_utils import (
    area_frame,
    cv_frame,
    monte_carlo_metrics,
    monte_carlo_stats_frame,
    monte_carlo_trial_frame,
    nn_frame,
    sweep_frame,
    validation_frame,
    waveform_to_frame,
    write_json,
    write_outputs,
)
from .models.array_core import (
    EvaluationMode,
    SearchQuery,
    format_bits,
    hamming_distance,
    program_array,
    read_array_file,
    write_array_file,
)
from .models.readout_metrics import estimate_hd
from .models.transient_engine import simulate_search_transient

Bits = Tuple[int, ...]
ARRAY_FILE = "array.txt"
FIT_FILE = "fit.json"


def load_rows(stored: Optional[Bits], array_path: Optional[Path]) -> List[Bits]:
    """Stored rows from a single bit string or a bit-row file."""
    if array_path is None:
        if stored is None:
            raise ConfigError("either --stored or --array is required")
        return [stored]
    try:
        return read_array_file(array_path)
    except (OSError, DomainError) as e:
        raise ConfigError(f"--array: {e}") from e


def _cv_curve(context: RunContext, v_min: float, v_max: float, points: int):
    if points < 2 or not v_max > v_min:
        raise ConfigError("cv-curve needs --points >= 2 and --v-max > --v-min")
    frame = cv_frame(context.config.device.memcap, np.linspace(v_min, v_max, points))
    return {"cv_curve": frame}, {"points": points, "v_min": v_min, "v_max": v_max}, frame


def _write(context: RunContext, rows: List[Bits]):
    config = context.config
    array = program_array(
        rows, config.bias, memcap=config.device.memcap, fefet=config.device.fefet,
        c_fixed=config.array.c_fixed,
    )
    records = [
        {"row": r, "column": c, "bit": cell.state.bit, "state": cell.state.value}
        for r, word in enumerate(array.words)
        for c, cell in enumerate(word.cells)
    ]
    readback = [format_bits(row) for row in array.stored_rows]
    metrics = {
        "rows": len(rows),
        "width": array.width,
        "readback_matches": readback == [format_bits(row) for row in rows],
    }
    return {"cells": pd.DataFrame(records)}, metrics, array


def _search_word(
    context: RunContext,
    rows: List[Bits],
    query_bits: Bits,
    mode: ModelMode,
    waveform: bool,
):
    config = context.config
    width = len(rows[0])
    if len(query_bits) != width:
        raise ConfigError(f"--query has {len(query_bits)} bits, stored rows have {width}")

    array = program_array(
        rows, config.bias, memcap=config.device.memcap, fefet=config.device.fefet,
        c_fixed=config.array.c_fixed,
    )
    query = SearchQuery(bits=query_bits)
    calibration = sweep_word(config, rows[0], range(width + 1), mode).calibration

    records = []
    for r, (row, word) in enumerate(zip(rows, array.words)):
        td = scheme_delay(word, query, config, Scheme.TD, mode)
        if math.isinf(td.delay):
            raise ConvergenceError(f"row {r}: no threshold crossing within t_max")
        vd = scheme_delay(word, query, config, Scheme.VD, mode)
        records.append(
            {
                "row": r,
                "stored": format_bits(row),
                "hd": hamming_distance(row, query_bits),
                "td_delay_s": td.delay,
                "td_converged": td.converged,
                "hd_estimate": estimate_hd(td.delay, calibration, width),
                "vd_delay_s": vd.delay,
                "vd_discharged": vd.converged,
            }
        )
    frames = {"search": pd.DataFrame(records)}

    if waveform:
        eval_mode = EvaluationMode.PHYSICAL if mode is ModelMode.PHYSICAL_TRANSIENT else EvaluationMode.TABLE
        traced = simulate_search_transient(
            array.words[0], query, config.bias, config.driver, config.transient, eval_mode,
            keep_waveform=True,
        )
        frames["waveform"] = waveform_to_frame(traced.waveform, config.driver)

    metrics = {
        "query": format_bits(query_bits),
        "calibration": calibration.model_dump(),
        "hd_estimates_exact": all(rec["hd"] == rec["hd_estimate"] for rec in records),
    }
    return frames, metrics, records


def run_workflow(
    command: str,
    context: RunContext,
    out_dir: Path,
    fmt: str = "csv",
    mode: Optional[ModelMode] = None,
    schemes: Optional[Sequence[Scheme]] = None,
    threads: Optional[int] = None,
    debug: bool = False,
    console: Optional[Console] = None,
    **options: Any,
) -> Dict[str, Any]:
    """
    Run one command, write its outputs and print a summary.

    Args:
        command: CLI subcommand name
        context: Resolved config, seed and TDC
        out_dir: Output directory
        fmt: Data file format, csv or json
        mode: TD delay model override
        schemes: Readout schemes for monte-carlo and nn-search
        threads: Worker threads for Monte Carlo trials
        debug: Whether to enable debug logging
        console: Console for the summary (default: stdout)
        **options: Command-specific options

    Returns:
        Dictionary with the command result, written files and whether every
        check passed
    """
    console = console or Console()
    mode = ModelMode(mode or context.config.experiment.model_mode)
    runner = ExperimentRunner(context, threads=threads, debug=debug)
    passed = True
    extra_files: List[Path] = []

    if command == "cv-curve":
        frames, metrics, result = _cv_curve(
            context, options["v_min"], options["v_max"], options["points"]
        )
        ui.render_frame(console, result, "C-V curve")
    elif command == "write":
        rows = load_rows(options.get("stored"), options.get("array"))
        frames, metrics, result = _write(context, rows)
        extra_files.append(write_array_file(Path(out_dir) / ARRAY_FILE, result.stored_rows))
        ui.render_frame(console, frames["cells"], "Programmed cells")
        passed = metrics["readback_matches"]
    elif command == "search-word":
        rows = load_rows(options.get("stored"), options.get("array"))
        frames, metrics, result = _search_word(
            context, rows, options["query"], mode, options.get("waveform", False)
        )
        ui.render_frame(console, frames["search"], "Search")
    elif command == "sweep-hd":
        result = runner.execute("sweep-hd", mode=mode)
        frames = {"delays": sweep_frame(result)}
        metrics = {
            "calibration": result.calibration.model_dump(),
            "model_mode": mode.value,
            "hd_list": [hd for hd, _ in result.points],
        }
        fit = {
            **metrics["calibration"],
            "model_mode": mode.value,
            "hd_list": metrics["hd_list"],
            "seed": context.seed,
            "config": context.echo(),
        }
        extra_files.append(write_json(Path(out_dir) / FIT_FILE, fit))
        ui.render_sweep(console, result)
    elif command == "monte-carlo":
        result = runner.execute("monte-carlo", schemes=schemes, mode=mode)
        frames = {
            "mc_trials": monte_carlo_trial_frame(result),
            "mc_stats": monte_carlo_stats_frame(result),
        }
        metrics = monte_carlo_metrics(result)
        ui.render_monte_carlo(console, result)
    elif command == "nn-search":
        result = runner.execute("nn-search", schemes=schemes, mode=mode)
        frames = {"nn_trials": nn_frame(result)}
        metrics = {r.scheme.value: {"accuracy": r.accuracy, "correct": r.correct} for r in result}
        ui.render_nn(console, result)
    elif command == "area-report":
        result = runner.execute("area-report")
        frames = {"area": area_frame(result)}
        metrics = {e.structure_name: e.ratio_vs_this_work for e in result}
        ui.render_area(console, result)
    elif command == "validate":
        result = runner.execute("validate")
        frames = {"checks": validation_frame(result)}
        passed = all(check.passed for check in result)
        metrics = {"passed": passed, "checks": {c.name: c.passed for c in result}}
        ui.render_validation(console, result)
    else:
        raise ValueError(f"Unknown command: {command}")

    files = write_outputs(out_dir, frames, fmt, context, command, metrics, extra_files)
    ui.render_files(console, files)

    summary = runner.get_execution_summary()
    if summary["total_actions"]:
        console.print(f"⏱️  {summary['total_actions']} action(s) in {summary['total_time']:.2f}s")
    console.print("🎉 Done!" if passed else "❌ One or more checks failed")

    return {"command": command, "result": result, "files": files, "passed": passed}
