"""Robust PCA on top of a robust location/covariance estimate.

``fit`` first maps the data losslessly onto its centered column space, runs
the chosen estimator there, and eigendecomposes the robust covariance. Score
distances and orthogonal distances are then compared against fixed cutoffs to
produce an outlier map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Literal, Optional, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..utils.logging_config import get_logger
from .depth import projection_depth, select_deepest
from .exceptions import DegenerateDataError, InvalidArgumentError, NumericFailureError
from .fir import FirConfig, FirResult, fir_estimate, subset_size
from .numerics import (
    DataMatrix,
    RngStream,
    Vector,
    chi2_quantile,
    gaussian_quantile,
    sample_unit_directions,
    subset_moments,
    svd_thin,
    sym_eig,
)
from .validators import MatrixValidator

logger = get_logger("robust_pca")

RANK_TOLERANCE = 1e-8
CUTOFF_QUANTILE = 0.975
OD_SNAP_TOLERANCE = 1e-9


class EstimateMethod(str, Enum):
    CLASSICAL = "classical"
    FDB = "fdb"
    FIR = "fir"

    @classmethod
    def parse(cls, value: str | EstimateMethod) -> EstimateMethod:
        if isinstance(value, cls):
            return value
        normalized = str(value).strip().lower()
        if normalized == "cpca":
            return cls.CLASSICAL
        try:
            return cls(normalized)
        except ValueError as exc:
            raise InvalidArgumentError(
                f"Unknown method: {value}",
                details={"allowed": [m.value for m in cls] + ["cpca"]},
            ) from exc


class PcaOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: EstimateMethod = EstimateMethod.FIR
    allow_wide: bool = False
    max_rank: Optional[int] = Field(default=None, ge=1)
    n_components: Optional[int] = Field(default=None, ge=1)
    explained_variance: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    variance_rule: Literal["eigenvalues", "squared"] = "eigenvalues"
    center_rule: Literal["corrected", "literal"] = "corrected"
    od_transform: Literal["wilson_hilferty", "raw"] = "wilson_hilferty"

    @model_validator(mode="after")
    def _one_component_rule(self) -> PcaOptions:
        if self.n_components is not None and self.explained_variance is not None:
            raise ValueError("set at most one of n_components and explained_variance")
        return self


@dataclass(frozen=True)
class Preprocessed:
    Z: DataMatrix
    V: DataMatrix
    mu0: Vector
    r0: int


class _Subspace(Protocol):
    center: Vector
    loadings: DataMatrix


@dataclass(frozen=True)
class _Basis:
    center: Vector
    loadings: DataMatrix


@dataclass(frozen=True)
class RobustPcaModel:
    method: EstimateMethod
    loadings: DataMatrix
    scores: DataMatrix
    variances: Vector
    center: Vector
    r0: int
    r1: int
    sd: Vector
    od: Vector
    cutoff_sd: float
    cutoff_od: float
    outlier_flags: np.ndarray
    h_indices: np.ndarray
    eigenvalues: Vector

    def transform(self, points: Any) -> DataMatrix:
        rows = MatrixValidator.validate(points, name="points")
        MatrixValidator.validate_columns(rows, self.center.size, name="points")
        return (rows - self.center) @ self.loadings

    def score_distances(self, points: Any) -> Vector:
        return score_distance(self.transform(points), self.variances)

    def orthogonal_distances(self, points: Any) -> Vector:
        return orthogonal_distance(points, self)


def preprocess_project(X: Any, max_rank: Optional[int] = None) -> Preprocessed:
    """Project ``X`` onto the span of its centered data.

    Column signs are fixed so the largest-magnitude centered score of each
    axis is positive, which makes the map commute with rotations of ``X``.
    """
    data = MatrixValidator.validate(X, name="X", min_rows=2)
    n = data.shape[0]
    mu0 = data.mean(axis=0)

    U, s, V = svd_thin((data - mu0) / math.sqrt(n))
    r0 = int(np.count_nonzero(s > RANK_TOLERANCE * s[0])) if s.size and s[0] > 0.0 else 0
    if r0 == 0:
        raise DegenerateDataError("degenerate data: all rows are identical", details={"n": n})
    if max_rank is not None:
        r0 = min(r0, int(max_rank))

    V = V[:, :r0].copy()
    U = U[:, :r0]
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[pivots, np.arange(r0)] < 0.0, -1.0, 1.0)
    V *= signs

    return Preprocessed(Z=data @ V, V=V, mu0=mu0, r0=r0)


def classical_estimate(Z: Any) -> FirResult:
    data = MatrixValidator.validate(Z, name="Z", min_rows=2)
    n = data.shape[0]
    indices = np.arange(n)
    mu, sigma = subset_moments(data, indices)
    return FirResult(mu=mu, sigma=sigma, h_indices=indices, h=n, batch_m=n)


def fdb_estimate(
    Z: Any,
    alpha: float,
    directions: Optional[Any] = None,
    rng: Optional[RngStream] = None,
    n_directions: int = 500,
) -> FirResult:
    """Mean and covariance of the ``floor(alpha * n)`` deepest points."""
    data = MatrixValidator.validate(Z, name="Z", min_rows=2)
    n, p = data.shape
    if not 0.5 <= alpha < 1.0:
        raise InvalidArgumentError("FDB needs 0.5 <= alpha < 1", details={"alpha": alpha})

    h = subset_size(alpha, n)
    if not 2 <= h < n:
        raise InvalidArgumentError("alpha gives an unusable subset size", details={"h": h, "n": n})

    if directions is None:
        if rng is None:
            raise InvalidArgumentError("FDB needs either directions or a random stream")
        directions = sample_unit_directions(p, n_directions, rng)

    depth = projection_depth(data, directions)
    h_indices = np.asarray(select_deepest(depth.depth, h), dtype=np.intp)
    mu, sigma = subset_moments(data, h_indices)
    return FirResult(mu=mu, sigma=sigma, h_indices=h_indices, h=h, batch_m=h)


def run_estimator(
    Z: Any,
    method: EstimateMethod,
    config: FirConfig,
    directions: Optional[Any] = None,
) -> FirResult:
    if method is EstimateMethod.CLASSICAL:
        return classical_estimate(Z)
    if method is EstimateMethod.FDB:
        return fdb_estimate(
            Z,
            config.alpha,
            directions=directions,
            rng=config.rng(),
            n_directions=config.n_directions,
        )
    return fir_estimate(Z, config, directions=directions)


def score_distance(T: Any, variances: Any) -> Vector:
    scores = np.asarray(T, dtype=np.float64)
    l = np.asarray(variances, dtype=np.float64).ravel()
    if np.any(l <= 0.0):
        raise InvalidArgumentError("variances must be positive")
    if scores.ndim != 2 or scores.shape[1] != l.size:
        raise InvalidArgumentError(
            "scores must have one column per variance",
            details={"shape": list(scores.shape), "components": int(l.size)},
        )
    return np.sqrt(np.sum(scores**2 / l, axis=1))


def orthogonal_distance(X: Any, model: _Subspace) -> Vector:
    """Residual norm of each row after projecting onto the model subspace."""
    data = MatrixValidator.validate(X, name="X")
    MatrixValidator.validate_columns(data, model.center.size, name="X")

    offsets = data - model.center
    residual = offsets - (offsets @ model.loadings) @ model.loadings.T
    od = np.linalg.norm(residual, axis=1)

    # rounding residue of an exact reconstruction
    scale = max(1.0, float(np.max(np.abs(offsets))))
    od[od < OD_SNAP_TOLERANCE * scale] = 0.0
    return od


def outlier_cutoffs(
    sd: Any,
    od: Any,
    r1: int,
    od_transform: Literal["wilson_hilferty", "raw"] = "wilson_hilferty",
) -> tuple[float, float]:
    od_values = np.asarray(od, dtype=np.float64).ravel()
    if np.asarray(sd).size < 2 or od_values.size < 2:
        raise InvalidArgumentError("cutoffs need at least two points")

    cutoff_sd = math.sqrt(chi2_quantile(r1, CUTOFF_QUANTILE))
    if not np.any(od_values > 0.0):
        return cutoff_sd, 0.0

    z = gaussian_quantile(CUTOFF_QUANTILE)
    if od_transform == "raw":
        cutoff_od = float(np.mean(od_values) + np.std(od_values, ddof=1) * z)
    else:
        transformed = od_values ** (2.0 / 3.0)
        cutoff_od = float((np.mean(transformed) + np.std(transformed, ddof=1) * z) ** 1.5)
    return cutoff_sd, cutoff_od


def classify(model: RobustPcaModel) -> np.ndarray:
    return (model.sd > model.cutoff_sd) | (model.od > model.cutoff_od)


def _retained_components(eigenvalues: Vector, options: PcaOptions) -> int:
    if eigenvalues.size == 0 or eigenvalues[0] <= 0.0:
        return 0
    r1 = int(np.count_nonzero(eigenvalues > RANK_TOLERANCE * eigenvalues[0]))

    if options.n_components is not None:
        r1 = min(r1, options.n_components)
    elif options.explained_variance is not None:
        kept = eigenvalues[:r1]
        share = np.cumsum(kept) / np.sum(kept)
        r1 = min(r1, int(np.searchsorted(share, options.explained_variance - 1e-12)) + 1)
    return r1


def fit(
    X: Any,
    options: Optional[PcaOptions] = None,
    config: Optional[FirConfig] = None,
    directions: Optional[Any] = None,
) -> RobustPcaModel:
    """Fit robust PCA. ``directions``, if given, live in the projected space."""
    options = options or PcaOptions()
    config = config or FirConfig()
    data = MatrixValidator.validate(X, name="X", min_rows=2)
    n, p = data.shape

    if p >= n and not options.allow_wide:
        raise InvalidArgumentError(
            "p exceeds n unsupported; use allow_wide to reduce the rank first",
            details={"n": n, "p": p},
        )

    pre = preprocess_project(data, max_rank=options.max_rank)
    estimate = run_estimator(pre.Z, options.method, config, directions=directions)

    P, L = sym_eig(estimate.sigma)
    r1 = _retained_components(L, options)
    if r1 == 0:
        raise NumericFailureError(
            "robust covariance has no positive eigenvalues",
            details={"method": options.method.value, "r0": pre.r0},
        )

    P1 = P[:, :r1].copy()
    loadings = pre.V @ P1
    pivots = np.argmax(np.abs(loadings), axis=0)
    signs = np.where(loadings[pivots, np.arange(r1)] < 0.0, -1.0, 1.0)
    P1 *= signs
    loadings *= signs

    scores = (pre.Z - estimate.mu) @ P1
    variances = L[:r1] ** 2 if options.variance_rule == "squared" else L[:r1].copy()

    if options.center_rule == "literal":
        center = pre.mu0 + estimate.mu @ pre.V.T
    else:
        center = pre.mu0 + (estimate.mu - pre.mu0 @ pre.V) @ pre.V.T

    sd = score_distance(scores, variances)

    od = orthogonal_distance(data, _Basis(center=center, loadings=loadings))
    cutoff_sd, cutoff_od = outlier_cutoffs(sd, od, r1, options.od_transform)
    flags = (sd > cutoff_sd) | (od > cutoff_od)

    logger.info(
        "Robust PCA fitted",
        extra={
            "extra_data": {
                "method": options.method.value,
                "n": n,
                "p": p,
                "r0": pre.r0,
                "r1": r1,
                "subset": int(estimate.h_indices.size),
                "flagged": int(np.count_nonzero(flags)),
            }
        },
    )

    return RobustPcaModel(
        method=options.method,
        loadings=loadings,
        scores=scores,
        variances=variances,
        center=center,
        r0=pre.r0,
        r1=r1,
        sd=sd,
        od=od,
        cutoff_sd=cutoff_sd,
        cutoff_od=cutoff_od,
        outlier_flags=flags,
        h_indices=estimate.h_indices,
        eigenvalues=L,
    )
