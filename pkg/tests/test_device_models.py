import math

import numpy as np
import pytest
from pydantic import ValidationError

from camsim.errors import DomainError
from camsim.models.device_models import (
    BiasScheme,
    FeFetParams,
    MemcapacitorParams,
    PolarizationState,
    apply_write_pulse,
    capacitance,
    effective_cell_capacitance,
    fefet_current,
)

SYMMETRIC = MemcapacitorParams(v_tn=0.5, v_tp=0.5, slope_s=0.1, v_shift=1.5)


def test_explicit_branch_example():
    # v_eff = 0.7 - 1.5 = -0.8: p-branch three slopes past onset
    c = capacitance(SYMMETRIC, PolarizationState.P_NEG, 0.7)
    expected = 1e-15 + 9e-15 * (1 / (1 + math.exp(13)) + 1 / (1 + math.exp(-3)))
    assert c == pytest.approx(expected, rel=1e-12)
    assert c == pytest.approx(9.573e-15, rel=1e-3)


def test_mid_depletion_floor():
    params = MemcapacitorParams(v_tn=0.5, v_tp=0.5, slope_s=0.1, v_shift=0.5)
    # P_NEG at +0.5 V puts v_eff at 0, five slopes from both onsets
    c = capacitance(params, PolarizationState.P_NEG, 0.5)
    excess = (c - params.c_lcs) / (params.c_hcs - params.c_lcs)
    assert 0 < excess < 0.02


@pytest.mark.parametrize("v", np.linspace(-5.0, 5.0, 41))
def test_mirror_symmetry_for_symmetric_device(v):
    assert capacitance(SYMMETRIC, PolarizationState.P_POS, v) == pytest.approx(
        capacitance(SYMMETRIC, PolarizationState.P_NEG, -v), rel=1e-12
    )


def test_capacitance_vectorizes(memcap):
    grid = np.linspace(-6, 6, 121)
    values = capacitance(memcap, PolarizationState.P_POS, grid)
    assert values.shape == grid.shape
    assert np.all(values >= memcap.c_lcs) and np.all(values <= memcap.c_hcs)


def test_saturates_on_branches(memcap):
    deep = memcap.v_tn + 5 * memcap.slope_s
    c = capacitance(memcap, PolarizationState.P_NEG, deep + memcap.v_shift)
    assert abs(c - memcap.c_hcs) / memcap.c_hcs <= 0.01


@pytest.mark.parametrize("v", [math.nan, math.inf, -math.inf])
def test_non_finite_voltage_rejected(memcap, v):
    with pytest.raises(DomainError):
        capacitance(memcap, PolarizationState.P_POS, v)


@pytest.mark.parametrize("v_ml", np.arange(0.0, 1.0001, 0.01))
@pytest.mark.parametrize("stored,query", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_xnor_truth_table_over_ml_swing(memcap, bias, stored, query, v_ml):
    c = effective_cell_capacitance(memcap, stored, query, bias, v_ml)
    target = memcap.c_lcs if stored == query else memcap.c_hcs
    assert c == pytest.approx(target, rel=0.05)


def test_truth_table_mid_swing_examples(memcap, bias):
    assert effective_cell_capacitance(memcap, 1, 1, bias, 0.5) == pytest.approx(
        memcap.c_lcs, rel=0.01
    )
    assert effective_cell_capacitance(memcap, 0, 1, bias, 0.5) == pytest.approx(
        memcap.c_hcs, rel=0.01
    )


def test_write_pulses_follow_table_one(memcap, bias):
    assert apply_write_pulse(PolarizationState.P_NEG, 6.5, 500e-9, memcap) is PolarizationState.P_POS
    assert apply_write_pulse(PolarizationState.P_POS, -6.5, 500e-9, memcap) is PolarizationState.P_NEG
    assert bias.write_amplitude(1) == 6.5 and bias.write_amplitude(0) == -6.5


def test_short_or_weak_pulses_do_nothing(memcap):
    short = 0.5 * memcap.t_min_write
    assert apply_write_pulse(PolarizationState.P_POS, -6.5, short, memcap) is PolarizationState.P_POS
    assert apply_write_pulse(PolarizationState.P_NEG, 3.9, 500e-9, memcap) is PolarizationState.P_NEG
    with pytest.raises(DomainError):
        apply_write_pulse(PolarizationState.P_NEG, 6.5, -1e-9, memcap)


def test_fefet_current_convention(fefet):
    assert fefet_current(fefet, 1, 0) == fefet.i_on
    assert fefet_current(fefet, 0, 1) == fefet.i_on
    assert fefet_current(fefet, 1, 1) == fefet.i_off


@pytest.mark.parametrize("bit", [2, -1, 0.5, 1.0])
def test_bits_must_be_zero_or_one(fefet, bit):
    with pytest.raises(DomainError):
        fefet_current(fefet, bit, 0)


def test_parameter_invariants():
    with pytest.raises(ValidationError):
        MemcapacitorParams(c_lcs=10e-15, c_hcs=1e-15)
    with pytest.raises(ValidationError):
        FeFetParams(i_on=1e-12, i_off=1e-6)
    with pytest.raises(ValidationError):
        BiasScheme(t_write=0.0)
