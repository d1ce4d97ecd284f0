"""
Output serialization for experiment results

Tabular results become pandas DataFrames and are written as CSV or JSON
records in SI units. Each run also writes summary.json with the metrics,
the resolved config and seed, the provenance map and a SHA-256 digest per
data file. The only run-dependent key is generated_at.
"""

import hashlib
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .config import RunContext
from .experiments import (
    AreaEntry,
    HdSweepResult,
    MonteCarloResult,
    NnSearchResult,
    ValidationCheck,
)
from .models.device_models import MemcapacitorParams, PolarizationState, capacitance
from .models.transient_engine import InverterDriverParams, Waveform

FORMATS = ("csv", "json")
SUMMARY_FILE = "summary.json"
TIMESTAMP_KEY = "generated_at"


def jsonable(value: Any) -> Any:
    """Recursively replace non-finite floats with null and numpy scalars with Python ones."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_frame(frame: pd.DataFrame, path: Path, fmt: str = "csv") -> Path:
    """
    Write one table; infinite values become empty cells (CSV) or null (JSON).

    Args:
        frame: Table to write
        path: Target path without extension
        fmt: "csv" or "json"

    Returns:
        The written path, with extension
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown format: {fmt}")
    path = Path(path).with_suffix(f".{fmt}")
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = frame.replace([np.inf, -np.inf], np.nan)

    if fmt == "csv":
        frame.to_csv(path, index=False, na_rep="", float_format="%.12g", lineterminator="\n")
    else:
        records = jsonable(frame.astype(object).where(frame.notna(), None).to_dict(orient="records"))
        path.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    return path


def write_json(path: Path, data: Any) -> Path:
    """Deterministic JSON document: sorted keys, non-finite values as null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    return path


def write_summary(out_dir: Path, summary: Dict[str, Any], files: Sequence[Path]) -> Path:
    """Write summary.json with data-file digests and a timestamp."""
    payload = dict(jsonable(summary))
    payload["files"] = {path.name: file_digest(path) for path in files}
    payload[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat()

    return write_json(Path(out_dir) / SUMMARY_FILE, payload)


def write_outputs(
    out_dir: Path,
    frames: Mapping[str, pd.DataFrame],
    fmt: str,
    context: RunContext,
    command: str,
    metrics: Mapping[str, Any],
    extra_files: Sequence[Path] = (),
) -> List[Path]:
    """
    Write every data table of a run plus its summary.json.

    Files already written by the caller (extra_files) are digested too.

    Returns:
        Paths written, summary last
    """
    out_dir = Path(out_dir)
    files = list(extra_files)
    files += [write_frame(frame, out_dir / name, fmt) for name, frame in frames.items()]
    summary = {
        "command": command,
        "version": __version__,
        "seed": context.seed,
        "config": context.echo(),
        "provenance": context.provenance,
        "metrics": metrics,
    }
    return files + [write_summary(out_dir, summary, files)]


def cv_frame(params: MemcapacitorParams, voltages: Iterable[float]) -> pd.DataFrame:
    """C-V samples of both polarization states over a gate voltage grid."""
    grid = np.asarray(list(voltages), dtype=float)
    data = {"v_g_sd": grid}
    for state in PolarizationState:
        data[f"c_{state.value.lower()}_f"] = capacitance(params, state, grid)
    return pd.DataFrame(data)


def waveform_to_frame(
    waveform: Waveform, driver: Optional[InverterDriverParams] = None
) -> pd.DataFrame:
    """
    ML trace as a table. Given the driver, adds v_out_v: the ideal second
    inverter, v_dd while the ML is below v_m and 0 otherwise, delayed by t_inv.
    """
    times = np.asarray(waveform.times, dtype=float)
    v_ml = np.asarray(waveform.values, dtype=float)
    frame = pd.DataFrame({"time_s": times, "v_ml_v": v_ml})
    if driver is not None:
        seen = np.interp(times - driver.t_inv, times, v_ml)
        frame["v_out_v"] = np.where(seen < driver.v_m, driver.v_dd, 0.0)
    return frame


def sweep_frame(result: HdSweepResult) -> pd.DataFrame:
    cal = result.calibration
    return pd.DataFrame(
        {
            "hd": [hd for hd, _ in result.points],
            "delay_s": [delay for _, delay in result.points],
            "fit_delay_s": [cal.intercept + cal.slope * hd for hd, _ in result.points],
            "converged": list(result.converged),
        }
    )


def monte_carlo_trial_frame(results: Sequence[MonteCarloResult]) -> pd.DataFrame:
    """Long table of every TDC-measured delay: one row per (scheme, trial, hd)."""
    parts = []
    for result in results:
        delays = np.asarray(result.trial_delays, dtype=float)
        trials, hds = np.meshgrid(np.arange(delays.shape[0]), result.hd_list, indexing="ij")
        parts.append(
            pd.DataFrame(
                {
                    "scheme": result.scheme.value,
                    "trial": trials.ravel(),
                    "hd": hds.ravel(),
                    "delay_s": delays.ravel(),
                }
            )
        )
    return pd.concat(parts, ignore_index=True)


def monte_carlo_stats_frame(results: Sequence[MonteCarloResult]) -> pd.DataFrame:
    """Per-HD statistics: sample count, moments, nominal delay and accuracy."""
    rows = []
    for result in results:
        by_hd = {dist.hd: dist for dist in result.distributions}
        pair_z = dict(result.margin.per_adjacent_pair) if result.margin else {}
        for hd, reference in zip(result.hd_list, result.reference_means):
            dist = by_hd.get(hd)
            rows.append(
                {
                    "scheme": result.scheme.value,
                    "hd": hd,
                    "n_finite": len(dist.samples) if dist else 0,
                    "mean_s": dist.mean if dist else np.nan,
                    "std_s": dist.std if dist else np.nan,
                    "reference_s": reference,
                    "accuracy": result.accuracy_at(hd),
                    "z_to_next": pair_z.get(hd, np.nan),
                }
            )
    return pd.DataFrame(rows)


def monte_carlo_metrics(results: Sequence[MonteCarloResult]) -> Dict[str, Any]:
    metrics: Dict[str, Any] = {}
    for result in results:
        entry: Dict[str, Any] = {
            "per_hd_accuracy": dict(result.per_hd_accuracy),
            "match_flags": result.match_flags,
            "non_converged": result.non_converged,
            "margin": result.margin.model_dump(mode="json") if result.margin else None,
        }
        metrics[result.scheme.value] = entry
    return metrics


def nn_frame(results: Sequence[NnSearchResult]) -> pd.DataFrame:
    rows = [
        {"scheme": result.scheme.value, **trial.model_dump(), "correct": trial.correct}
        for result in results
        for trial in result.trials
    ]
    return pd.DataFrame(rows)


def area_frame(entries: Sequence[AreaEntry]) -> pd.DataFrame:
    return pd.DataFrame([entry.model_dump() for entry in entries])


def validation_frame(checks: Sequence[ValidationCheck]) -> pd.DataFrame:
    return pd.DataFrame([check.model_dump() for check in checks])
