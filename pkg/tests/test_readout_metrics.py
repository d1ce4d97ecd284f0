import math

import numpy as np
import pytest
from pydantic import ValidationError

from camsim.errors import DegenerateFitError, DomainError
from camsim.models.readout_metrics import (
    DelayDistribution,
    HdCalibration,
    TdcParams,
    calibrate_hd_map,
    classify_delays,
    default_tdc,
    estimate_hd,
    quantized_time,
    sensing_margin,
    tdc_measure,
    tdc_quantize,
)

SPREAD = 7.0710678e-12


def test_tdc_quantize_example():
    tdc = TdcParams(t_lsb=10e-12)
    assert tdc_quantize(155.6e-12, tdc) == 15
    assert quantized_time(15, tdc) == pytest.approx(155e-12)


def test_tdc_clamps_and_rejects():
    tdc = TdcParams(t_offset=50e-12, t_lsb=10e-12)
    assert tdc_quantize(20e-12, tdc) == 0
    with pytest.raises(DomainError):
        tdc_quantize(math.nan, tdc)
    with pytest.raises(ValidationError):
        TdcParams(t_lsb=0.0)


def test_tdc_measure_passes_no_event_through():
    tdc = TdcParams(t_lsb=10e-12)
    assert math.isinf(tdc_measure(math.inf, tdc))
    assert tdc_measure(155.6e-12, tdc) == pytest.approx(155e-12)


def test_tdc_code_is_monotone_in_delay():
    tdc = TdcParams(t_offset=3e-12, t_lsb=31.19e-12)
    delays = np.linspace(-50e-12, 1.2e-9, 2001)
    codes = [tdc_quantize(float(d), tdc) for d in delays]
    measured = [tdc_measure(float(d), tdc) for d in delays]
    assert all(b >= a for a, b in zip(codes, codes[1:]))
    assert all(b >= a for a, b in zip(measured, measured[1:]))
    assert codes[0] == 0 and codes[-1] == math.floor((1.2e-9 - 3e-12) / 31.19e-12)


def test_default_tdc_is_half_the_hd_step(memcap, driver):
    tdc = default_tdc(memcap, driver)
    assert tdc.t_offset == 0.0
    assert tdc.t_lsb == pytest.approx(0.5 * 1e4 * math.log(2) * 9e-15, rel=1e-12)
    assert tdc.t_lsb == pytest.approx(31.19e-12, rel=1e-3)


def test_calibration_of_exact_line():
    cal = calibrate_hd_map([(0, 1.0), (1, 3.0), (2, 5.0), (3, 7.0)])
    assert cal.slope == pytest.approx(2.0)
    assert cal.intercept == pytest.approx(1.0)
    assert cal.r_squared == pytest.approx(1.0)


@pytest.mark.parametrize("scale", [1e-3, 2.5, 1e12])
def test_calibration_scales_with_delay_units(scale):
    rng = np.random.default_rng(5)
    points = [(hd, 155e-12 + 62.4e-12 * hd + rng.normal(0.0, 5e-12)) for hd in range(17)]
    base = calibrate_hd_map(points)
    scaled = calibrate_hd_map([(hd, scale * delay) for hd, delay in points])

    assert scaled.slope == pytest.approx(scale * base.slope, rel=1e-9)
    assert scaled.intercept == pytest.approx(scale * base.intercept, rel=1e-9)
    assert scaled.r_squared == pytest.approx(base.r_squared, rel=1e-9)


def test_calibration_needs_two_distinct_hds():
    with pytest.raises(DegenerateFitError):
        calibrate_hd_map([(3, 1.0), (3, 1.1)])
    with pytest.raises(DegenerateFitError):
        calibrate_hd_map([(0, 1.0), (1, math.inf)])


def test_estimate_hd_rounds_and_clamps():
    cal = HdCalibration(intercept=1.0, slope=2.0, r_squared=1.0)
    assert estimate_hd(4.9, cal) == 2
    assert estimate_hd(5.1, cal) == 2
    assert estimate_hd(100.0, cal, n_max=8) == 8
    assert estimate_hd(-10.0, cal, n_max=8) == 0


def test_estimate_hd_rejects_bad_inputs():
    with pytest.raises(DomainError):
        estimate_hd(1.0, HdCalibration(intercept=0.0, slope=-1.0, r_squared=1.0))
    with pytest.raises(DomainError):
        estimate_hd(math.inf, HdCalibration(intercept=0.0, slope=1.0, r_squared=1.0))


def test_classify_increasing_references():
    classes = classify_delays([14.0, 16.0, 26.0, 100.0, 0.0], [10.0, 20.0, 30.0])
    assert classes.tolist() == [0, 1, 2, 2, 0]


def test_classify_with_no_discharge_class():
    classes = classify_delays([math.inf, 19.0, 11.0, 14.0], [math.inf, 20.0, 10.0])
    assert classes.tolist() == [0, 1, 2, 2]


def test_classify_rejects_non_monotone_references():
    with pytest.raises(DomainError):
        classify_delays([1.0], [10.0, 30.0, 20.0])


def _pair(mean):
    return [mean - SPREAD, mean + SPREAD]


def test_sensing_margin_z_score():
    dists = [
        DelayDistribution.from_samples(0, _pair(100e-12)),
        DelayDistribution.from_samples(1, _pair(200e-12)),
    ]
    assert dists[0].std == pytest.approx(10e-12, rel=1e-6)

    report = sensing_margin(dists)
    hd, z = report.worst_pair
    assert hd == 0
    assert z == pytest.approx(7.0710678, rel=1e-6)
    assert report.accuracy_at(0) == 1.0 and report.accuracy_at(1) == 1.0


@pytest.mark.parametrize("a, b", [(3.0, -40e-12), (1e12, 5.0), (0.5, 1e-9)])
def test_sensing_margin_is_affine_invariant(a, b):
    rng = np.random.default_rng(11)
    samples = [100e-12 + 60e-12 * hd + rng.normal(0.0, 15e-12, 50) for hd in range(5)]
    base = sensing_margin([DelayDistribution.from_samples(hd, s) for hd, s in enumerate(samples)])
    moved = sensing_margin(
        [DelayDistribution.from_samples(hd, a * s + b) for hd, s in enumerate(samples)]
    )

    for (hd, z), (moved_hd, moved_z) in zip(base.per_adjacent_pair, moved.per_adjacent_pair):
        assert moved_hd == hd
        assert moved_z == pytest.approx(z, rel=1e-9)
    assert moved.worst_pair[0] == base.worst_pair[0]
    assert moved.per_hd_accuracy == base.per_hd_accuracy


def test_sensing_margin_reference_boundaries():
    dists = [
        DelayDistribution.from_samples(0, [9.0, 11.0, 14.0, 16.0]),
        DelayDistribution.from_samples(1, [19.0, 21.0, 22.0, 23.0]),
    ]
    report = sensing_margin(dists, reference_means=[10.0, 20.0])
    assert report.accuracy_at(0) == 0.75
    assert report.accuracy_at(1) == 1.0


def test_zero_spread_gives_infinite_z_and_marker():
    dists = [
        DelayDistribution.from_samples(0, [1.0, 1.0]),
        DelayDistribution.from_samples(1, [2.0, 2.0]),
    ]
    report = sensing_margin(dists)
    assert math.isinf(report.worst_pair[1])
    dumped = report.model_dump(mode="json")
    assert dumped["worst_pair"] == [0, "inf"]
    assert dumped["per_adjacent_pair"] == [[0, "inf"]]


def test_sensing_margin_input_checks():
    a = DelayDistribution.from_samples(0, [1.0, 2.0])
    b = DelayDistribution.from_samples(1, [3.0, 4.0])
    with pytest.raises(DomainError):
        sensing_margin([a])
    with pytest.raises(DomainError):
        sensing_margin([b, a])
    with pytest.raises(DomainError):
        sensing_margin([a, DelayDistribution.from_samples(1, [3.0])])
    with pytest.raises(DomainError):
        sensing_margin([a, b], reference_means=[1.0])


def test_distribution_moments_must_match_samples():
    with pytest.raises(ValidationError):
        DelayDistribution(hd=0, samples=(1.0, 2.0), mean=5.0, std=np.sqrt(0.5))
