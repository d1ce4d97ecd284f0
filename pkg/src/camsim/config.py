"""
Configuration schema and loading for the CAM simulator

A JSON document is validated against a strict schema (unknown keys are
rejected); missing keys take documented defaults. Every resolved value is
tagged with where it came from so outputs can echo it.
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    model_validator,
)

from .errors import ConfigError
from .models.device_models import BiasScheme, FeFetParams, MemcapacitorParams
from .models.readout_metrics import TdcParams, default_tdc
from .models.transient_engine import (
    InverterDriverParams,
    TransientConfig,
    VdReadoutParams,
)
from .models.variation_sampling import VariationSpec

SEED_ENV_VAR = "CAMSIM_SEED"
MAX_SEED = 2**64 - 1

PUBLISHED_BIAS = "published"
DEFAULT_NON_PAPER = "default(non-paper)"
FROM_CONFIG = "config"
DERIVED = "derived"


class ModelMode(str, Enum):
    CLOSED_FORM = "closed_form"
    TABLE_TRANSIENT = "table_transient"
    PHYSICAL_TRANSIENT = "physical_transient"


class Scheme(str, Enum):
    TD = "TD"
    VD = "VD"


class DeviceConfig(MemcapacitorParams, FeFetParams):
    """Flat device section: memcapacitor and VD-cell parameters side by side."""

    @property
    def memcap(self) -> MemcapacitorParams:
        return MemcapacitorParams(
            **self.model_dump(include=set(MemcapacitorParams.model_fields))
        )

    @property
    def fefet(self) -> FeFetParams:
        return FeFetParams(**self.model_dump(include=set(FeFetParams.model_fields)))


class ArrayConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    c_fixed: NonNegativeFloat = 5e-15


class TdcConfig(BaseModel):
    """t_lsb = null derives half the nominal TD delay step per HD."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t_offset: float = 0.0
    t_lsb: Optional[PositiveFloat] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_bits: PositiveInt = 16
    m_words: PositiveInt = 32
    hd_list: Tuple[int, ...] = Field(default=tuple(range(9)), min_length=1)
    k_trials: PositiveInt = 1000
    seed: Optional[int] = Field(default=None, ge=0, le=MAX_SEED)
    model_mode: ModelMode = ModelMode.TABLE_TRANSIENT
    scheme: Scheme = Scheme.TD

    @model_validator(mode="after")
    def _check_hd_list(self) -> "ExperimentConfig":
        for hd in self.hd_list:
            if not 0 <= hd <= self.n_bits:
                raise ValueError(f"hd_list value {hd} is outside [0, {self.n_bits}]")
        if any(b <= a for a, b in zip(self.hd_list, self.hd_list[1:])):
            raise ValueError("hd_list must be strictly increasing")
        return self


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    device: DeviceConfig = Field(default_factory=DeviceConfig)
    bias: BiasScheme = Field(default_factory=BiasScheme)
    array: ArrayConfig = Field(default_factory=ArrayConfig)
    driver: InverterDriverParams = Field(default_factory=InverterDriverParams)
    transient: TransientConfig = Field(default_factory=TransientConfig)
    vd: VdReadoutParams = Field(default_factory=VdReadoutParams)
    variation: VariationSpec = Field(default_factory=VariationSpec)
    tdc: TdcConfig = Field(default_factory=TdcConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)


class RunContext(BaseModel):
    """A config with its seed and TDC resolved, plus value provenance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    config: SimConfig
    seed: int
    tdc: TdcParams
    provenance: Dict[str, str]

    def echo(self) -> dict:
        """Resolved config as JSON-ready data, seed and t_lsb filled in."""
        data = self.config.model_dump(mode="json")
        data["experiment"]["seed"] = self.seed
        data["tdc"]["t_lsb"] = self.tdc.t_lsb
        return data


def format_validation_error(error: ValidationError) -> str:
    """One 'key.path: message' line per schema violation."""
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "\n".join(lines)


def parse_config(data: Mapping) -> SimConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(f"<root>: expected a JSON object, got {type(data).__name__}")
    try:
        return SimConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e


def load_config(path: Union[str, Path, None]) -> SimConfig:
    """
    Load and validate a JSON config file; None gives the all-default config.

    Raises:
        ConfigError: On unreadable files, malformed JSON or schema violations,
            with the offending key path in the message
    """
    if path is None:
        return SimConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    return parse_config(data)


def _seed_from_env(env: Mapping[str, str]) -> Optional[int]:
    raw = env.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return None
    try:
        seed = int(raw)
    except ValueError as e:
        raise ConfigError(f"{SEED_ENV_VAR}: expected an unsigned integer, got {raw!r}") from e
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"{SEED_ENV_VAR}: {seed} is outside [0, 2^64)")
    return seed


def resolve_seed(
    config: SimConfig, cli_seed: Optional[int] = None, env: Optional[Mapping[str, str]] = None
) -> Tuple[int, str]:
    """
    Seed and its source: --seed, then the config file, then CAMSIM_SEED, then 0.
    """
    if cli_seed is not None:
        if not 0 <= cli_seed <= MAX_SEED:
            raise ConfigError(f"--seed: {cli_seed} is outside [0, 2^64)")
        return cli_seed, "cli"
    if config.experiment.seed is not None:
        return config.experiment.seed, FROM_CONFIG
    env_seed = _seed_from_env(os.environ if env is None else env)
    if env_seed is not None:
        return env_seed, "env"
    return 0, DEFAULT_NON_PAPER


def _walk_provenance(model: BaseModel, prefix: str, out: Dict[str, str]) -> None:
    for name in type(model).model_fields:
        value = getattr(model, name)
        path = f"{prefix}.{name}" if prefix else name
        if isinstance(value, BaseModel):
            _walk_provenance(value, path, out)
        elif name in model.model_fields_set:
            out[path] = FROM_CONFIG
        elif path.startswith("bias."):
            out[path] = PUBLISHED_BIAS
        else:
            out[path] = DEFAULT_NON_PAPER


def provenance_map(config: SimConfig) -> Dict[str, str]:
    """Source tag for every leaf value of a config."""
    out: Dict[str, str] = {}
    _walk_provenance(config, "", out)
    return out


def resolve_run(
    config: SimConfig,
    cli_seed: Optional[int] = None,
    env: Optional[Mapping[str, str]] = None,
) -> RunContext:
    """Resolve seed and TDC resolution and attach provenance."""
    seed, seed_source = resolve_seed(config, cli_seed, env)
    provenance = provenance_map(config)
    provenance["experiment.seed"] = seed_source

    if config.tdc.t_lsb is None:
        tdc = default_tdc(
            config.device.memcap, config.driver, config.transient.edge, config.tdc.t_offset
        )
        provenance["tdc.t_lsb"] = DERIVED
    else:
        tdc = TdcParams(t_offset=config.tdc.t_offset, t_lsb=config.tdc.t_lsb)

    return RunContext(config=config, seed=seed, tdc=tdc, provenance=provenance)
