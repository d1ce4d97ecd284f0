import math

import pytest
from pydantic import ValidationError

from camsim.errors import DomainError
from camsim.models.array_core import EvaluationMode, SearchQuery, flip_prefix, nominal_word, write_word
from camsim.models.device_models import FeFetParams
from camsim.models.transient_engine import (
    EvaluationEdge,
    InverterDriverParams,
    TransientConfig,
    VdReadoutParams,
    closed_form_delay,
    integrate_delay,
    simulate_search_transient,
    vd_discharge_delay,
    vd_gap_ratio,
    vd_nominal_delay,
)

PATTERN = (0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0)


def _word(memcap, fefet, bias, bits=PATTERN):
    return write_word(nominal_word(len(bits), memcap, fefet), bits, bias)


def test_closed_form_example(driver):
    result = closed_form_delay(21e-15, driver)
    assert result.converged and result.waveform is None
    assert result.delay == pytest.approx(10e-12 + 1e4 * math.log(2) * 21e-15, rel=1e-12)
    assert result.delay == pytest.approx(155.56e-12, rel=1e-4)


def test_closed_form_zero_load_is_inverter_delay(driver):
    assert closed_form_delay(0.0, driver).delay == driver.t_inv
    with pytest.raises(DomainError):
        closed_form_delay(-1e-15, driver)


@pytest.mark.parametrize("c_ml", [6e-15, 21e-15, 93e-15, 165e-15])
def test_integrator_matches_analytic(driver, transient_cfg, c_ml):
    numeric = integrate_delay(lambda v: c_ml, driver, transient_cfg)
    assert numeric.converged
    assert numeric.delay == pytest.approx(closed_form_delay(c_ml, driver).delay, rel=5e-3)


def test_rising_output_edge():
    driver = InverterDriverParams(v_m=0.3)
    cfg = TransientConfig(edge=EvaluationEdge.OUTPUT_RISING)
    numeric = integrate_delay(lambda v: 21e-15, driver, cfg).delay
    analytic = closed_form_delay(21e-15, driver, EvaluationEdge.OUTPUT_RISING).delay
    assert numeric == pytest.approx(analytic, rel=5e-3)
    assert analytic > closed_form_delay(21e-15, driver).delay


@pytest.mark.parametrize("mode", list(EvaluationMode))
def test_delay_increases_with_hd(memcap, fefet, bias, driver, transient_cfg, mode):
    bits = (1, 0, 0, 1)
    word = _word(memcap, fefet, bias, bits)
    delays = [
        simulate_search_transient(
            word, SearchQuery(bits=flip_prefix(bits, hd)), bias, driver, transient_cfg, mode
        ).delay
        for hd in range(5)
    ]
    assert all(b > a for a, b in zip(delays, delays[1:]))


def test_table_transient_matches_closed_form(memcap, fefet, bias, driver, transient_cfg):
    word = _word(memcap, fefet, bias)
    query = SearchQuery(bits=flip_prefix(PATTERN, 8))
    result = simulate_search_transient(word, query, bias, driver, transient_cfg)
    assert result.delay == pytest.approx(closed_form_delay(93e-15, driver).delay, rel=5e-3)


def test_timeout_reports_inf(driver):
    result = integrate_delay(lambda v: 21e-15, driver, TransientConfig(t_max=1e-11))
    assert math.isinf(result.delay)
    assert not result.converged


def test_waveform_settles_to_rail(driver, transient_cfg):
    result = integrate_delay(lambda v: 21e-15, driver, transient_cfg, keep_waveform=True)
    waveform = result.waveform
    assert waveform.values[0] == 0.0
    assert abs(driver.v_dd - waveform.values[-1]) <= 1e-3 * driver.v_dd
    assert waveform.times[-1] > result.delay - driver.t_inv


def test_non_positive_load_rejected(driver, transient_cfg):
    with pytest.raises(DomainError):
        integrate_delay(lambda v: 0.0, driver, transient_cfg)


def test_driver_threshold_below_supply():
    with pytest.raises(ValidationError):
        InverterDriverParams(v_m=1.2)
    with pytest.raises(ValidationError):
        TransientConfig(rel_tol=0.0)


@pytest.fixture
def ideal_fefet() -> FeFetParams:
    return FeFetParams(i_off=0.0)


def test_vd_delay_at_hd_eight(memcap, ideal_fefet, bias, transient_cfg):
    word = _word(memcap, ideal_fefet, bias)
    query = SearchQuery(bits=flip_prefix(PATTERN, 8))
    result = vd_discharge_delay(word, query, VdReadoutParams(), transient_cfg)
    assert result.converged
    assert result.delay == pytest.approx(3.125e-9, rel=1e-12)
    assert result.delay == pytest.approx(vd_nominal_delay(VdReadoutParams(), ideal_fefet, 16, 8))


def test_vd_full_match_never_discharges(memcap, ideal_fefet, bias, transient_cfg):
    word = _word(memcap, ideal_fefet, bias)
    result = vd_discharge_delay(word, SearchQuery(bits=PATTERN), VdReadoutParams(), transient_cfg)
    assert math.isinf(result.delay)
    assert not result.converged


def test_vd_delay_halves_when_hd_doubles(memcap, ideal_fefet, bias, transient_cfg):
    word = _word(memcap, ideal_fefet, bias)
    vd = VdReadoutParams()
    d2 = vd_discharge_delay(word, SearchQuery(bits=flip_prefix(PATTERN, 2)), vd, transient_cfg)
    d4 = vd_discharge_delay(word, SearchQuery(bits=flip_prefix(PATTERN, 4)), vd, transient_cfg)
    assert d2.delay == pytest.approx(2 * d4.delay, rel=1e-12)


def test_vd_leakage_discharge_and_window(memcap, fefet, bias, transient_cfg):
    word = _word(memcap, fefet, bias)
    query = SearchQuery(bits=PATTERN)
    vd = VdReadoutParams()
    # 16 x 10 pA needs ~156 us, past the default 1 us window
    default = vd_discharge_delay(word, query, vd, transient_cfg)
    assert math.isinf(default.delay) and not default.converged

    leaky = vd_discharge_delay(word, query, vd, TransientConfig(t_max=1e-3))
    assert leaky.converged
    assert leaky.delay == pytest.approx(25e-15 / (16 * fefet.i_off), rel=1e-9)


def test_vd_waveform_is_linear_ramp(memcap, ideal_fefet, bias, transient_cfg):
    word = _word(memcap, ideal_fefet, bias)
    query = SearchQuery(bits=flip_prefix(PATTERN, 4))
    result = vd_discharge_delay(word, query, VdReadoutParams(), transient_cfg, keep_waveform=True)
    values = result.waveform.values
    assert len(values) == 201
    assert values[0] == 1.0 and values[-1] == pytest.approx(0.0, abs=1e-12)
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_vd_gap_compression(ideal_fefet):
    assert vd_gap_ratio(VdReadoutParams(), ideal_fefet, 16, 7) == pytest.approx(1 / 28, rel=1e-9)
    assert vd_gap_ratio(VdReadoutParams(), ideal_fefet, 16, 1) == 1.0
    with pytest.raises(DomainError):
        vd_gap_ratio(VdReadoutParams(), ideal_fefet, 16, 16)
