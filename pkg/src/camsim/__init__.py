"""
camsim: behavioral simulator for ferroelectric memcapacitor time-domain CAM

Device, array and transient models for a single-memcapacitor TD CAM cell,
the current-discharge VD baseline it is compared against, and seeded
experiment pipelines (HD sweep, Monte Carlo, nearest-neighbour search).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CamSimError,
    ConfigError,
    ConvergenceError,
    DegenerateFitError,
    DomainError,
)

__all__ = [
    "CamSimError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateFitError",
    "DomainError",
    "__version__",
]
