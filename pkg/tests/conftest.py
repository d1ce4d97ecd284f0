import io

import pytest
from rich.console import Console

from camsim.config import SimConfig, parse_config
from camsim.models.device_models import BiasScheme, FeFetParams, MemcapacitorParams
from camsim.models.transient_engine import InverterDriverParams, TransientConfig


@pytest.fixture
def memcap() -> MemcapacitorParams:
    return MemcapacitorParams()


@pytest.fixture
def fefet() -> FeFetParams:
    return FeFetParams()


@pytest.fixture
def bias() -> BiasScheme:
    return BiasScheme()


@pytest.fixture
def driver() -> InverterDriverParams:
    return InverterDriverParams()


@pytest.fixture
def transient_cfg() -> TransientConfig:
    return TransientConfig()


@pytest.fixture
def default_config() -> SimConfig:
    return SimConfig()


@pytest.fixture
def small_config() -> SimConfig:
    """16-bit words with a short trial count, closed-form TD delays."""
    return parse_config(
        {
            "experiment": {
                "n_bits": 16,
                "m_words": 8,
                "k_trials": 40,
                "model_mode": "closed_form",
            }
        }
    )


@pytest.fixture
def quiet_console() -> Console:
    return Console(file=io.StringIO(), width=120)
