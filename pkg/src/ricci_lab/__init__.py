"""Numerical laboratory for rotationally symmetric Ricci flow on S^n and its extension criteria."""

from .errors import (ConfigError, InvalidProfile, NotConverged, OutOfRange, RicciLabError,
                     SingularData, StepUnderflow)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "InvalidProfile", "NotConverged", "OutOfRange", "RicciLabError",
    "SingularData", "StepUnderflow", "__version__",
]
