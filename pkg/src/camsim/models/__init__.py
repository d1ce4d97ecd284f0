"""
Models Package for the CAM simulator

Device, variation, array, transient and readout models. Every operation in
this package is a pure function of its inputs; the value types are frozen
pydantic models.
"""

from .array_core import (
    CamArray,
    CamWord,
    CellInstance,
    EvaluationMode,
    SearchQuery,
    build_ml_load,
    hamming_distance,
    write_word,
)
from .device_models import (
    BiasScheme,
    FeFetParams,
    MemcapacitorParams,
    PolarizationState,
    apply_write_pulse,
    capacitance,
    effective_cell_capacitance,
    fefet_current,
)
from .readout_metrics import (
    DelayDistribution,
    HdCalibration,
    MarginReport,
    TdcParams,
    calibrate_hd_map,
    classify_delays,
    estimate_hd,
    quantized_time,
    sensing_margin,
    tdc_measure,
    tdc_quantize,
)
from .transient_engine import (
    DelayResult,
    EvaluationEdge,
    InverterDriverParams,
    TransientConfig,
    VdReadoutParams,
    Waveform,
    closed_form_delay,
    integrate_delay,
    simulate_search_transient,
    vd_discharge_delay,
    vd_gap_ratio,
)
from .variation_sampling import (
    DistributionKind,
    SampledCellParams,
    VariationSpec,
    cov_estimate,
    sample_cell_params,
    sample_word_params,
)

__all__ = [
    "BiasScheme",
    "CamArray",
    "CamWord",
    "CellInstance",
    "DelayDistribution",
    "DelayResult",
    "DistributionKind",
    "EvaluationEdge",
    "EvaluationMode",
    "FeFetParams",
    "HdCalibration",
    "InverterDriverParams",
    "MarginReport",
    "MemcapacitorParams",
    "PolarizationState",
    "SampledCellParams",
    "SearchQuery",
    "TdcParams",
    "TransientConfig",
    "VariationSpec",
    "VdReadoutParams",
    "Waveform",
    "apply_write_pulse",
    "build_ml_load",
    "calibrate_hd_map",
    "classify_delays",
    "capacitance",
    "closed_form_delay",
    "cov_estimate",
    "effective_cell_capacitance",
    "estimate_hd",
    "fefet_current",
    "hamming_distance",
    "integrate_delay",
    "quantized_time",
    "sample_cell_params",
    "sample_word_params",
    "sensing_margin",
    "simulate_search_transient",
    "tdc_measure",
    "tdc_quantize",
    "vd_discharge_delay",
    "vd_gap_ratio",
    "write_word",
]
