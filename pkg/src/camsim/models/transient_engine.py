"""
Transient Engine for match-line evaluation

Converts match-line load into propagation delay. The TD path drives the ML
through the first inverter's pull resistance and detects the second
inverter's threshold crossing; the VD path discharges a precharged ML with
constant per-cell currents.
"""

import logging
import math
from enum import Enum
from typing import Callable, List, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

from ..errors import DomainError
from .array_core import CamWord, EvaluationMode, SearchQuery, ml_load_function
from .device_models import BiasScheme, FeFetParams, fefet_current

logger = logging.getLogger(__name__)


class EvaluationEdge(str, Enum):
    """Which output transition is timed."""

    OUTPUT_FALLING = "output_falling"  # ML charges 0 -> v_dd
    OUTPUT_RISING = "output_rising"  # ML discharges v_dd -> 0


class InverterDriverParams(BaseModel):
    """First inverter as a rail source behind r_drive; second as a threshold."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    v_dd: PositiveFloat = 1.0
    r_drive: PositiveFloat = 10e3
    v_m: PositiveFloat = 0.5
    t_inv: NonNegativeFloat = 10e-12

    @model_validator(mode="after")
    def _check_threshold(self) -> "InverterDriverParams":
        if not self.v_m < self.v_dd:
            raise ValueError(f"v_m ({self.v_m:g}) must be below v_dd ({self.v_dd:g})")
        return self


class TransientConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt_init: PositiveFloat = 5e-12
    rel_tol: float = 1e-3
    t_max: PositiveFloat = 1e-6
    max_refinements: PositiveInt = 10
    edge: EvaluationEdge = EvaluationEdge.OUTPUT_FALLING

    @field_validator("rel_tol")
    @classmethod
    def _check_rel_tol(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError(f"rel_tol must be in (0, 1), got {value:g}")
        return value


class Waveform(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    times: Tuple[float, ...]
    values: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_samples(self) -> "Waveform":
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have the same length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        return self


class DelayResult(BaseModel):
    """Propagation delay; a non-converged result carries delay = inf."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delay: float
    converged: bool
    waveform: Optional[Waveform] = None


class VdReadoutParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    v_precharge: PositiveFloat = 1.0
    v_ref: NonNegativeFloat = 0.5
    c_ml_vd: PositiveFloat = 50e-15

    @model_validator(mode="after")
    def _check_reference(self) -> "VdReadoutParams":
        if not self.v_ref < self.v_precharge:
            raise ValueError(
                f"v_ref ({self.v_ref:g}) must be below v_precharge ({self.v_precharge:g})"
            )
        return self


def delay_per_farad(
    driver: InverterDriverParams, edge: EvaluationEdge = EvaluationEdge.OUTPUT_FALLING
) -> float:
    """Slope of the RC delay in seconds per farad of ML load."""
    if not driver.v_m < driver.v_dd:
        raise DomainError(f"v_m ({driver.v_m:g}) must be below v_dd ({driver.v_dd:g})")
    if EvaluationEdge(edge) is EvaluationEdge.OUTPUT_FALLING:
        return driver.r_drive * math.log(driver.v_dd / (driver.v_dd - driver.v_m))
    return driver.r_drive * math.log(driver.v_dd / driver.v_m)


def closed_form_delay(
    c_ml: float,
    driver: InverterDriverParams,
    edge: EvaluationEdge = EvaluationEdge.OUTPUT_FALLING,
) -> DelayResult:
    """
    First-order RC delay of the inverter pair driving a constant load.

    Args:
        c_ml: Match-line load in farads
        driver: Inverter parameters
        edge: Timed output transition

    Returns:
        Converged DelayResult without a waveform
    """
    if not c_ml >= 0:
        raise DomainError(f"c_ml must be non-negative, got {c_ml!r}")
    return DelayResult(delay=driver.t_inv + delay_per_farad(driver, edge) * c_ml, converged=True)


def _integrate_crossing(
    load: Callable[[float], float],
    driver: InverterDriverParams,
    edge: EvaluationEdge,
    dt: float,
    t_max: float,
    keep_waveform: bool,
) -> Tuple[Optional[float], List[float], List[float]]:
    """
    Fixed-step RK4 on C(v) dv/dt = (v_target - v) / r_drive.

    Returns the interpolated v_m crossing time (None on timeout) and, when
    requested, the trace up to settling within 0.1% of the target rail.
    """
    rising_ml = edge is EvaluationEdge.OUTPUT_FALLING
    v_start, v_target = (0.0, driver.v_dd) if rising_ml else (driver.v_dd, 0.0)
    r_drive, v_m = driver.r_drive, driver.v_m
    settle_band = 1e-3 * driver.v_dd

    def dv_dt(v: float) -> float:
        c = load(v)
        if not c > 0:
            raise DomainError(f"non-positive ML capacitance {c!r} at v_ml = {v:g}")
        return (v_target - v) / (r_drive * c)

    t, v = 0.0, v_start
    times, values = ([t], [v]) if keep_waveform else ([], [])
    crossing = None

    for step in range(1, math.ceil(t_max / dt) + 1):
        k1 = dv_dt(v)
        k2 = dv_dt(v + 0.5 * dt * k1)
        k3 = dv_dt(v + 0.5 * dt * k2)
        k4 = dv_dt(v + dt * k3)
        v_next = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        if crossing is None:
            crossed = v < v_m <= v_next if rising_ml else v > v_m >= v_next
            if crossed:
                crossing = t + (v_m - v) / (v_next - v) * dt
                if not keep_waveform:
                    break

        t, v = step * dt, v_next
        if keep_waveform:
            times.append(t)
            values.append(v)
            if crossing is not None and abs(v_target - v) <= settle_band:
                break

    return crossing, times, values


def integrate_delay(
    load: Callable[[float], float],
    driver: InverterDriverParams,
    cfg: TransientConfig,
    keep_waveform: bool = False,
) -> DelayResult:
    """
    Delay of the inverter pair driving an arbitrary voltage-dependent load.

    The step is halved until successive delay estimates agree within
    cfg.rel_tol or cfg.max_refinements is exhausted.

    Args:
        load: ML capacitance in farads as a function of ML voltage
        driver: Inverter parameters
        cfg: Integrator configuration
        keep_waveform: Whether to return the ML trace of the final run

    Returns:
        DelayResult; delay = inf and converged = False on timeout
    """
    edge = EvaluationEdge(cfg.edge)

    dt = cfg.dt_init
    previous, _, _ = _integrate_crossing(load, driver, edge, dt, cfg.t_max, False)
    converged = False
    estimate = previous

    if previous is not None:
        for _ in range(cfg.max_refinements):
            dt /= 2.0
            estimate, _, _ = _integrate_crossing(load, driver, edge, dt, cfg.t_max, False)
            if estimate is None:
                break
            if abs(estimate - previous) <= cfg.rel_tol * estimate:
                converged = True
                break
            logger.debug("refining: dt=%.3g s, delay %.6g -> %.6g", dt, previous, estimate)
            previous = estimate

    waveform = None
    if keep_waveform:
        _, times, values = _integrate_crossing(load, driver, edge, dt, cfg.t_max, True)
        waveform = Waveform(times=tuple(times), values=tuple(values))

    if estimate is None:
        logger.debug("no v_m crossing within t_max = %g s", cfg.t_max)
        return DelayResult(delay=math.inf, converged=False, waveform=waveform)
    return DelayResult(delay=estimate + driver.t_inv, converged=converged, waveform=waveform)


def simulate_search_transient(
    word: CamWord,
    query: SearchQuery,
    bias: BiasScheme,
    driver: InverterDriverParams,
    cfg: TransientConfig,
    mode: EvaluationMode = EvaluationMode.TABLE,
    keep_waveform: bool = False,
) -> DelayResult:
    """
    Numerically integrate one search evaluation of a TD word.

    Args:
        word: Stored word
        query: Search query
        bias: Bias scheme for the S/D search voltages
        driver: Inverter parameters
        cfg: Integrator configuration
        mode: Table (constant load) or physical (C-V at the instantaneous v_ml)
        keep_waveform: Whether to return the ML trace of the final run

    Returns:
        DelayResult from integrate_delay
    """
    load = ml_load_function(word, query, bias, mode)
    return integrate_delay(load, driver, cfg, keep_waveform)


def _vd_total_current(word: CamWord, query: SearchQuery) -> float:
    if query.width != word.width:
        raise DomainError(f"query has length {query.width}, word has width {word.width}")
    return sum(
        fefet_current(cell.params.fefet, stored, q)
        for cell, stored, q in zip(word.cells, word.stored_bits, query.bits)
    )


def vd_discharge_delay(
    word: CamWord,
    query: SearchQuery,
    vd: VdReadoutParams,
    cfg: TransientConfig,
    keep_waveform: bool = False,
) -> DelayResult:
    """
    Time for a precharged VD match line to fall to v_ref.

    Every cell sinks a constant current, so the discharge is a linear ramp.
    Zero total current, or a crossing later than cfg.t_max, is reported as
    "no discharge" (converged = False, delay = inf): the full-match signature.
    """
    current = _vd_total_current(word, query)
    delay = math.inf
    if current > 0:
        delay = vd.c_ml_vd * (vd.v_precharge - vd.v_ref) / current

    waveform = None
    if keep_waveform:
        t_end = cfg.t_max
        if current > 0:
            t_end = min(vd.c_ml_vd * vd.v_precharge / current, cfg.t_max)
        times = [t_end * i / 200 for i in range(201)]
        values = [max(vd.v_precharge - current * t / vd.c_ml_vd, 0.0) for t in times]
        waveform = Waveform(times=tuple(times), values=tuple(values))

    if delay > cfg.t_max:
        return DelayResult(delay=math.inf, converged=False, waveform=waveform)
    return DelayResult(delay=delay, converged=True, waveform=waveform)


def vd_nominal_delay(vd: VdReadoutParams, fefet: FeFetParams, n_bits: int, hd: int) -> float:
    """Closed-form VD delay for a nominal word at a given HD (inf if no current)."""
    current = hd * fefet.i_on + (n_bits - hd) * fefet.i_off
    if current <= 0:
        return math.inf
    return vd.c_ml_vd * (vd.v_precharge - vd.v_ref) / current


def vd_gap_ratio(vd: VdReadoutParams, fefet: FeFetParams, n_bits: int, k: int) -> float:
    """
    Adjacent-HD delay gap at k -> k+1 relative to the gap at 1 -> 2.

    With i_off = 0 this is 2 / (k (k + 1)), the VD compression of high-HD classes.
    """
    if not 1 <= k < n_bits:
        raise DomainError(f"k must be in [1, {n_bits - 1}], got {k}")

    def gap(h: int) -> float:
        return vd_nominal_delay(vd, fefet, n_bits, h) - vd_nominal_delay(vd, fefet, n_bits, h + 1)

    return gap(k) / gap(1)
