"""
Variation Sampling for Monte Carlo runs

Turns coefficient-of-variation tables into per-cell device realizations.
Every draw goes through an explicit numpy Generator, so a run is a pure
function of its seed.
"""

import logging
from enum import Enum
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, model_validator
from scipy.special import ndtri
from scipy.stats import truncnorm

from ..errors import DomainError
from .device_models import FeFetParams, MemcapacitorParams

logger = logging.getLogger(__name__)

# Column order of every draw; changing it changes every seeded result.
VARIED_FIELDS = ("c_hcs", "c_lcs", "i_on", "i_off")

# Independent purposes for streams spawned from one seed.
PATTERN_STREAM = 0
TRIAL_STREAM = 1
QUERY_STREAM = 2


class DistributionKind(str, Enum):
    NORMAL_TRUNCATED = "NORMAL_TRUNCATED"
    LOGNORMAL = "LOGNORMAL"


class VariationSpec(BaseModel):
    """Device-to-device coefficient of variation per parameter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cov_c_hcs: NonNegativeFloat = 0.03
    cov_c_lcs: NonNegativeFloat = 0.03
    cov_i_on: NonNegativeFloat = 0.15
    cov_i_off: NonNegativeFloat = 0.30
    distribution: DistributionKind = DistributionKind.NORMAL_TRUNCATED

    @model_validator(mode="after")
    def _check_truncation(self) -> "VariationSpec":
        if self.distribution is DistributionKind.NORMAL_TRUNCATED:
            for name in VARIED_FIELDS:
                cov = getattr(self, f"cov_{name}")
                if cov >= 1.0:
                    raise ValueError(
                        f"cov_{name} = {cov:g} is too large for NORMAL_TRUNCATED; "
                        "use LOGNORMAL for CoV >= 1"
                    )
        return self

    @property
    def covs(self) -> np.ndarray:
        return np.array([getattr(self, f"cov_{name}") for name in VARIED_FIELDS])

    @classmethod
    def none(cls) -> "VariationSpec":
        """A spec with every CoV at zero."""
        return cls(cov_c_hcs=0.0, cov_c_lcs=0.0, cov_i_on=0.0, cov_i_off=0.0)

    def scaled(self, factor: float) -> "VariationSpec":
        """Every CoV multiplied by a common factor."""
        updates = {
            f"cov_{name}": getattr(self, f"cov_{name}") * factor for name in VARIED_FIELDS
        }
        return type(self)(**{**self.model_dump(), **updates})


class SampledCellParams(BaseModel):
    """One cell's realization of both device models."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    memcap: MemcapacitorParams
    fefet: FeFetParams


def spawn_generators(seed: int, count: int, purpose: int) -> List[np.random.Generator]:
    """
    Independent generators for one purpose of one seed.

    Args:
        seed: Non-negative experiment seed
        count: Number of generators (e.g. one per trial)
        purpose: Stream purpose, one of the *_STREAM constants

    Returns:
        Generators in index order
    """
    root = np.random.SeedSequence(entropy=seed, spawn_key=(purpose,))
    return [np.random.default_rng(child) for child in root.spawn(count)]


def uniforms_to_factors(u: np.ndarray, spec: VariationSpec) -> np.ndarray:
    """
    Map uniforms in [0, 1) to multiplicative factors with mean 1 and std CoV.

    The mapping is an inverse CDF, so a common set of uniforms gives coupled
    realizations across different CoV levels.
    """
    factors = np.ones_like(u, dtype=float)
    for col, cov in enumerate(spec.covs):
        if cov == 0.0:
            continue
        if spec.distribution is DistributionKind.NORMAL_TRUNCATED:
            x = truncnorm.ppf(u[:, col], -1.0 / cov, np.inf)
            factors[:, col] = 1.0 + cov * x
        else:
            sigma = np.sqrt(np.log1p(cov * cov))
            factors[:, col] = np.exp(sigma * ndtri(u[:, col]) - 0.5 * sigma * sigma)
    return factors


def draw_variation_factors(
    spec: VariationSpec, rng: np.random.Generator, n_cells: int
) -> np.ndarray:
    """Raw (n_cells, 4) factor matrix in VARIED_FIELDS column order."""
    return uniforms_to_factors(rng.random((n_cells, len(VARIED_FIELDS))), spec)


def _valid_rows(values: np.ndarray, base_i_off: float) -> np.ndarray:
    c_hcs, c_lcs, i_on, i_off = values.T
    ok = (c_lcs > 0) & (c_hcs > c_lcs) & (i_on > i_off) & np.isfinite(values).all(axis=1)
    if base_i_off > 0:
        ok &= i_off > 0
    else:
        ok &= i_off >= 0
    return ok


def sample_word_params(
    base_memcap: MemcapacitorParams,
    base_fefet: FeFetParams,
    spec: VariationSpec,
    rng: np.random.Generator,
    n_cells: int,
) -> List[SampledCellParams]:
    """
    Sample device parameters for a row of cells.

    Rows that break positivity or the c_hcs > c_lcs / i_on > i_off ordering
    are redrawn after the first pass, in row order.

    Args:
        base_memcap: Nominal memcapacitor parameters
        base_fefet: Nominal VD cell parameters
        spec: Variation specification
        rng: Generator owned by the caller for the duration of the call
        n_cells: Number of cells

    Returns:
        One SampledCellParams per cell
    """
    base = np.array(
        [base_memcap.c_hcs, base_memcap.c_lcs, base_fefet.i_on, base_fefet.i_off]
    )
    values = base * draw_variation_factors(spec, rng, n_cells)

    ok = _valid_rows(values, base_fefet.i_off)
    for row in np.flatnonzero(~ok):
        attempts = 0
        while not ok[row]:
            attempts += 1
            values[row] = base * draw_variation_factors(spec, rng, 1)[0]
            ok[row] = _valid_rows(values[row : row + 1], base_fefet.i_off)[0]
        logger.debug("cell %d redrawn %d time(s)", row, attempts)

    samples = []
    for c_hcs, c_lcs, i_on, i_off in values.tolist():
        samples.append(
            SampledCellParams(
                memcap=base_memcap.model_copy(update={"c_hcs": c_hcs, "c_lcs": c_lcs}),
                fefet=base_fefet.model_copy(update={"i_on": i_on, "i_off": i_off}),
            )
        )
    return samples


def sample_cell_params(
    base_memcap: MemcapacitorParams,
    base_fefet: FeFetParams,
    spec: VariationSpec,
    rng: np.random.Generator,
) -> SampledCellParams:
    """Sample one cell; equivalent to the first row of sample_word_params."""
    return sample_word_params(base_memcap, base_fefet, spec, rng, 1)[0]


def nominal_cell_params(
    base_memcap: MemcapacitorParams, base_fefet: FeFetParams
) -> SampledCellParams:
    return SampledCellParams(memcap=base_memcap, fefet=base_fefet)


def cov_estimate(samples: Sequence[float]) -> float:
    """
    Sample coefficient of variation (n-1 denominator).

    Raises:
        DomainError: With fewer than two samples or a non-positive mean
    """
    values = np.asarray(samples, dtype=float)
    if values.size < 2:
        raise DomainError(f"need at least 2 samples, got {values.size}")
    mean = values.mean()
    if not mean > 0:
        raise DomainError(f"sample mean must be positive, got {mean:g}")
    return float(values.std(ddof=1) / mean)
