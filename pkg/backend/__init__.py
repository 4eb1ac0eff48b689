from __future__ import annotations

from .core import (
    DegenerateDataError,
    EstimateMethod,
    FirConfig,
    FirError,
    FirResult,
    InvalidArgumentError,
    NumericFailureError,
    PcaOptions,
    RobustPcaModel,
    fir_estimate,
    fit,
)

__version__ = "1.0.0"

__all__ = [
    "DegenerateDataError",
    "EstimateMethod",
    "FirConfig",
    "FirError",
    "FirResult",
    "InvalidArgumentError",
    "NumericFailureError",
    "PcaOptions",
    "RobustPcaModel",
    "__version__",
    "fir_estimate",
    "fit",
]
