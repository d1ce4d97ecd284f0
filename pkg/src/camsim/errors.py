"""Exception types raised across the simulator."""


class CamSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(CamSimError):
    """Invalid configuration: unreadable file, schema violation or broken invariant."""


class DomainError(CamSimError):
    """Input outside the domain of a model operation."""


class DegenerateFitError(CamSimError):
    """Calibration requested on points that do not determine a line."""


class ConvergenceError(CamSimError):
    """A transient did not converge within its time or refinement limits."""
