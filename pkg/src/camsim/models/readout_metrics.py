"""
Readout Metrics for delay-encoded search results

Time-to-digital quantization, the affine delay-to-HD calibration, and the
separability statistics used to compare TD and VD readout reliability.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    field_serializer,
    model_validator,
)
from scipy.stats import linregress

from ..errors import DegenerateFitError, DomainError
from .device_models import MemcapacitorParams
from .transient_engine import EvaluationEdge, InverterDriverParams, delay_per_farad


class TdcParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_offset: float = 0.0
    t_lsb: PositiveFloat


class HdCalibration(BaseModel):
    """Affine law delay = intercept + slope * hd."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    intercept: float
    slope: float
    r_squared: float = Field(ge=0.0, le=1.0)


class DelayDistribution(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    hd: int
    samples: Tuple[float, ...] = Field(min_length=1)
    mean: float
    std: float

    @model_validator(mode="after")
    def _check_moments(self) -> "DelayDistribution":
        mean, std = _moments(self.samples)
        if not (math.isclose(self.mean, mean, rel_tol=1e-9, abs_tol=1e-30)
                and math.isclose(self.std, std, rel_tol=1e-9, abs_tol=1e-30)):
            raise ValueError("mean/std are inconsistent with samples")
        return self

    @classmethod
    def from_samples(cls, hd: int, samples: Sequence[float]) -> "DelayDistribution":
        mean, std = _moments(samples)
        return cls(hd=hd, samples=tuple(float(s) for s in samples), mean=mean, std=std)


class MarginReport(BaseModel):
    """Adjacent-class z-scores and per-class accuracy; z = inf means zero spread."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    per_adjacent_pair: Tuple[Tuple[int, float], ...]
    worst_pair: Tuple[int, float]
    per_hd_accuracy: Tuple[Tuple[int, float], ...]

    @field_serializer("per_adjacent_pair", "per_hd_accuracy")
    def _serialize_pairs(self, pairs: Tuple[Tuple[int, float], ...]) -> list:
        return [[k, _finite_or_marker(value)] for k, value in pairs]

    @field_serializer("worst_pair")
    def _serialize_worst(self, pair: Tuple[int, float]) -> list:
        return [pair[0], _finite_or_marker(pair[1])]

    def accuracy_at(self, hd: int) -> float:
        return dict(self.per_hd_accuracy)[hd]


def _finite_or_marker(value: float):
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _moments(samples: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(samples, dtype=float)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), std


def default_tdc(
    memcap: MemcapacitorParams,
    driver: InverterDriverParams,
    edge: EvaluationEdge = EvaluationEdge.OUTPUT_FALLING,
    t_offset: float = 0.0,
) -> TdcParams:
    """TDC whose LSB is half the nominal TD delay step per unit HD."""
    slope = delay_per_farad(driver, edge) * (memcap.c_hcs - memcap.c_lcs)
    return TdcParams(t_offset=t_offset, t_lsb=0.5 * slope)


def tdc_quantize(delay: float, tdc: TdcParams) -> int:
    """Output code floor((delay - t_offset) / t_lsb), clamped below at 0."""
    if not math.isfinite(delay):
        raise DomainError(f"delay must be finite, got {delay!r}")
    return max(math.floor((delay - tdc.t_offset) / tdc.t_lsb), 0)


def quantized_time(code: int, tdc: TdcParams) -> float:
    """Centre of a code's time bin."""
    return tdc.t_offset + (code + 0.5) * tdc.t_lsb


def tdc_measure(delay: float, tdc: TdcParams) -> float:
    """Delay as seen through the TDC; inf (no event) passes through."""
    if math.isinf(delay):
        return delay
    return quantized_time(tdc_quantize(delay, tdc), tdc)


def calibrate_hd_map(points: Sequence[Tuple[int, float]]) -> HdCalibration:
    """
    Ordinary least-squares fit of delay against HD.

    Args:
        points: (hd, delay) pairs

    Returns:
        HdCalibration with the coefficient of determination

    Raises:
        DegenerateFitError: If fewer than two distinct HD values are given
    """
    hds = np.array([hd for hd, _ in points], dtype=float)
    delays = np.array([delay for _, delay in points], dtype=float)
    if np.unique(hds).size < 2:
        raise DegenerateFitError(
            f"calibration needs at least 2 distinct HD values, got {sorted(set(hds.tolist()))}"
        )
    if not np.all(np.isfinite(delays)):
        raise DegenerateFitError("calibration points contain non-finite delays")

    fit = linregress(hds, delays)
    r_squared = min(max(float(fit.rvalue) ** 2, 0.0), 1.0)
    return HdCalibration(
        intercept=float(fit.intercept), slope=float(fit.slope), r_squared=r_squared
    )


def estimate_hd(delay: float, cal: HdCalibration, n_max: Optional[int] = None) -> int:
    """
    Invert the calibration: nearest integer HD, clamped to [0, n_max] if given.
    """
    if not cal.slope > 0:
        raise DomainError(f"calibration slope must be positive, got {cal.slope!r}")
    if not math.isfinite(delay):
        raise DomainError(f"delay must be finite, got {delay!r}")
    hd = math.floor((delay - cal.intercept) / cal.slope + 0.5)
    if n_max is not None:
        hd = min(max(hd, 0), n_max)
    return hd


def classify_delays(delays: Sequence[float], reference_means: Sequence[float]) -> np.ndarray:
    """
    Class index of each delay under midpoint boundaries between reference means.

    Reference means must be monotone (increasing for TD, decreasing for VD).
    A delay equal to an infinite reference (VD no-discharge) takes that class.
    """
    refs = np.asarray(reference_means, dtype=float)
    values = np.asarray(delays, dtype=float)
    direction = 1.0 if refs[-1] >= refs[0] else -1.0
    ordered = direction * refs
    if np.any(np.diff(ordered) < 0):
        raise DomainError("reference means must be monotone in HD")
    boundaries = 0.5 * (ordered[:-1] + ordered[1:])
    classes = np.searchsorted(boundaries, direction * values, side="right")
    for index in np.flatnonzero(np.isinf(refs)):
        classes[values == refs[index]] = index
    return classes


def _pair_z(a: DelayDistribution, b: DelayDistribution) -> float:
    gap = abs(b.mean - a.mean)
    spread = math.sqrt(a.std**2 + b.std**2)
    if spread == 0.0:
        return math.inf if gap > 0 else 0.0
    return gap / spread


def sensing_margin(
    dists: Sequence[DelayDistribution],
    reference_means: Optional[Sequence[float]] = None,
) -> MarginReport:
    """
    Separability of adjacent-HD delay distributions.

    Args:
        dists: Distributions sorted by hd, each with at least two samples
        reference_means: Noiseless per-HD delays defining the decision
            boundaries; defaults to the distributions' own means

    Returns:
        MarginReport with z-scores per adjacent pair, the worst pair and
        per-HD classification accuracy
    """
    if len(dists) < 2:
        raise DomainError(f"need at least 2 distributions, got {len(dists)}")
    if any(b.hd <= a.hd for a, b in zip(dists, dists[1:])):
        raise DomainError("distributions must be sorted by strictly increasing hd")
    if any(len(d.samples) < 2 for d in dists):
        raise DomainError("every distribution needs at least 2 samples")

    refs = [d.mean for d in dists] if reference_means is None else list(reference_means)
    if len(refs) != len(dists):
        raise DomainError("reference_means must have one entry per distribution")

    pairs = tuple((a.hd, _pair_z(a, b)) for a, b in zip(dists, dists[1:]))
    worst = min(pairs, key=lambda pair: pair[1])

    accuracy = []
    for index, dist in enumerate(dists):
        predicted = classify_delays(dist.samples, refs)
        accuracy.append((dist.hd, float(np.mean(predicted == index))))

    return MarginReport(
        per_adjacent_pair=pairs, worst_pair=worst, per_hd_accuracy=tuple(accuracy)
    )
