"""
Device Models for the ferroelectric memcapacitor CAM cell

Closed-form behavioral models of the single ferroelectric memcapacitor
(C-V characteristic and polarization write) and of the ambipolar
ferroelectric transistor that the voltage-domain baseline is built from.
"""

from enum import Enum
from typing import Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeFloat,
    PositiveFloat,
    model_validator,
)
from scipy.special import expit

from ..errors import DomainError

ArrayLike = Union[float, np.ndarray]


class PolarizationState(str, Enum):
    """Nonvolatile ferroelectric polarization of a cell."""

    P_POS = "P_POS"  # stores bit 1
    P_NEG = "P_NEG"  # stores bit 0

    @classmethod
    def from_bit(cls, bit: int) -> "PolarizationState":
        return cls.P_POS if check_bit(bit) == 1 else cls.P_NEG

    @property
    def bit(self) -> int:
        return 1 if self is PolarizationState.P_POS else 0

    @property
    def sign(self) -> float:
        return 1.0 if self is PolarizationState.P_POS else -1.0


class MemcapacitorParams(BaseModel):
    """
    Nominal memcapacitor parameters, SI units.

    The default C-V window is placed so that the default search biases give
    an XNOR truth table over a 0-1 V match-line swing.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    c_lcs: PositiveFloat = 1e-15
    c_hcs: PositiveFloat = 10e-15
    v_tn: PositiveFloat = 2.38
    v_tp: PositiveFloat = 0.68
    slope_s: PositiveFloat = 0.025
    v_shift: PositiveFloat = 1.5
    v_coercive: PositiveFloat = 4.0
    t_min_write: PositiveFloat = 100e-9

    @model_validator(mode="after")
    def _check_capacitance_order(self) -> "MemcapacitorParams":
        if not self.c_hcs > self.c_lcs:
            raise ValueError(
                f"c_hcs ({self.c_hcs:g}) must be greater than c_lcs ({self.c_lcs:g})"
            )
        return self


class FeFetParams(BaseModel):
    """Two-level current model of the voltage-domain baseline cell."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    i_on: PositiveFloat = 1e-6
    i_off: NonNegativeFloat = 10e-12

    @model_validator(mode="after")
    def _check_current_order(self) -> "FeFetParams":
        if not self.i_on > self.i_off:
            raise ValueError(
                f"i_on ({self.i_on:g}) must be greater than i_off ({self.i_off:g})"
            )
        return self


class BiasScheme(BaseModel):
    """Write and search biases; defaults are the published device biases."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    v_search_1: float = 0.3
    v_search_0: float = -1.0
    v_write_1: float = 6.5
    v_write_0: float = -6.5
    t_write: PositiveFloat = 500e-9

    def search_voltage(self, query: int) -> float:
        """Common S/D voltage applied for a query bit."""
        return self.v_search_1 if check_bit(query) == 1 else self.v_search_0

    def write_amplitude(self, bit: int) -> float:
        """ML pulse amplitude that writes a bit."""
        return self.v_write_1 if check_bit(bit) == 1 else self.v_write_0


def check_bit(bit: int) -> int:
    """Return the bit as an int, rejecting anything other than 0 or 1."""
    if bit not in (0, 1) or isinstance(bit, float):
        raise DomainError(f"bit must be 0 or 1, got {bit!r}")
    return int(bit)


def logistic_cv(
    v_eff: ArrayLike,
    c_lcs: ArrayLike,
    c_hcs: ArrayLike,
    v_tn: ArrayLike,
    v_tp: ArrayLike,
    slope_s: ArrayLike,
) -> ArrayLike:
    """
    Depletion floor plus two logistic inversion branches.

    All arguments broadcast, so per-cell parameter arrays evaluate a whole
    word in one call.
    """
    n_branch = expit((v_eff - v_tn) / slope_s)
    p_branch = expit((-v_eff - v_tp) / slope_s)
    return c_lcs + (c_hcs - c_lcs) * (n_branch + p_branch)


def capacitance(
    params: MemcapacitorParams, state: PolarizationState, v_g_sd: ArrayLike
) -> ArrayLike:
    """
    Gate capacitance of a memcapacitor at a gate-to-source/drain voltage.

    Args:
        params: Device parameters
        state: Stored polarization, which shifts the C-V curve by +/- v_shift
        v_g_sd: Gate-to-S/D voltage, scalar or array

    Returns:
        Capacitance in farads, same shape as v_g_sd

    Raises:
        DomainError: If any voltage is not finite
    """
    v = np.asarray(v_g_sd, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"non-finite gate voltage: {v_g_sd!r}")

    v_eff = v + state.sign * params.v_shift
    c = logistic_cv(
        v_eff, params.c_lcs, params.c_hcs, params.v_tn, params.v_tp, params.slope_s
    )
    return float(c) if c.ndim == 0 else c


def apply_write_pulse(
    state: PolarizationState,
    amplitude: float,
    width: float,
    params: MemcapacitorParams,
) -> PolarizationState:
    """
    Apply an ML write pulse; switching is all-or-nothing.

    Args:
        state: Current polarization
        amplitude: Pulse amplitude in volts
        width: Pulse width in seconds
        params: Device parameters holding the switching thresholds

    Returns:
        The new polarization, or the input state if the pulse is too weak or short
    """
    if width < 0:
        raise DomainError(f"pulse width must be non-negative, got {width!r}")
    if width < params.t_min_write:
        return state
    if amplitude >= params.v_coercive:
        return PolarizationState.P_POS
    if amplitude <= -params.v_coercive:
        return PolarizationState.P_NEG
    return state


def effective_cell_capacitance(
    params: MemcapacitorParams,
    stored: int,
    query: int,
    bias: BiasScheme,
    v_ml: ArrayLike,
) -> ArrayLike:
    """
    Capacitance a cell adds to the match line during search.

    Args:
        params: Device parameters
        stored: Stored bit
        query: Query bit, mapped to the S/D voltage of the bias scheme
        bias: Bias scheme
        v_ml: Instantaneous match-line voltage

    Returns:
        Capacitance in farads
    """
    state = PolarizationState.from_bit(stored)
    v_sd = bias.search_voltage(query)
    return capacitance(params, state, np.asarray(v_ml, dtype=float) - v_sd)


def fefet_current(params: FeFetParams, stored: int, query: int) -> float:
    """Discharge current of a VD cell: i_on on mismatch, i_off on match."""
    return params.i_on if check_bit(stored) != check_bit(query) else params.i_off
