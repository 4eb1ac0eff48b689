from __future__ import annotations

from .depth import DepthResult, projection_depth, projection_outlyingness, select_deepest
from .exceptions import (
    DataFormatError,
    DegenerateDataError,
    FirError,
    InvalidArgumentError,
    InvalidStateError,
    NumericFailureError,
)
from .fir import FirConfig, FirResult, SelectionBox, box_contains, fir_estimate, scaled_distance, selection_box
from .ipca import IpcaModel, ipca_init, ipca_project, ipca_update
from .metrics import ErrorReport, cov_error, error_report, kl_divergence, location_error
from .numerics import RngStream, chi2_quantile, gaussian_quantile, mad, median
from .robust_pca import (
    EstimateMethod,
    PcaOptions,
    RobustPcaModel,
    classify,
    fdb_estimate,
    fit,
    orthogonal_distance,
    outlier_cutoffs,
    preprocess_project,
    score_distance,
)
from .simdata import LabeledData, SimSpec, generate, generate_lowrank, make_G

__all__ = [
    "DataFormatError",
    "DegenerateDataError",
    "DepthResult",
    "ErrorReport",
    "EstimateMethod",
    "FirConfig",
    "FirError",
    "FirResult",
    "InvalidArgumentError",
    "InvalidStateError",
    "IpcaModel",
    "LabeledData",
    "NumericFailureError",
    "PcaOptions",
    "RngStream",
    "RobustPcaModel",
    "SelectionBox",
    "SimSpec",
    "box_contains",
    "chi2_quantile",
    "classify",
    "cov_error",
    "error_report",
    "fdb_estimate",
    "fir_estimate",
    "fit",
    "gaussian_quantile",
    "generate",
    "generate_lowrank",
    "ipca_init",
    "ipca_project",
    "ipca_update",
    "kl_divergence",
    "location_error",
    "mad",
    "make_G",
    "median",
    "orthogonal_distance",
    "outlier_cutoffs",
    "preprocess_project",
    "projection_depth",
    "projection_outlyingness",
    "scaled_distance",
    "score_distance",
    "select_deepest",
    "selection_box",
]
