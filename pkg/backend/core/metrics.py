from __future__ import annotations

import math
from typing import Any

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field

from .exceptions import InvalidArgumentError, NumericFailureError
from .numerics import DataMatrix

MAX_TRUTH_CONDITION = 1e12
_NEGATIVE_EIGENVALUE_TOLERANCE = 1e-10


class ErrorReport(BaseModel):
    e_mu: float = Field(ge=0.0)
    e_sigma: float = Field(ge=0.0)
    e_kl: float = Field(ge=-1e-9)
    runtime_seconds: float = Field(default=0.0, ge=0.0)


def _square_pair(sigma_est: Any, sigma_true: Any, p: int) -> tuple[DataMatrix, DataMatrix]:
    est = np.asarray(sigma_est, dtype=np.float64)
    true = np.asarray(sigma_true, dtype=np.float64)
    if est.shape != (p, p) or true.shape != (p, p):
        raise InvalidArgumentError(
            "covariance matrices must be p x p",
            details={"p": p, "estimate": list(est.shape), "truth": list(true.shape)},
        )
    return est, true


def location_error(mu_est: Any, mu_true: Any) -> float:
    est = np.asarray(mu_est, dtype=np.float64).ravel()
    true = np.asarray(mu_true, dtype=np.float64).ravel()
    if est.size != true.size:
        raise InvalidArgumentError(
            "location vectors differ in length",
            details={"estimate": int(est.size), "truth": int(true.size)},
        )
    return float(np.linalg.norm(est - true))


def kl_divergence(sigma_est: Any, sigma_true: Any, p: int) -> float:
    """Gaussian KL term ``trace(S T^-1) - log det(S T^-1) - p``.

    Evaluated through the generalized eigenvalues of ``(S, T)`` so the
    log-determinant never forms a determinant.
    """
    est, true = _square_pair(sigma_est, sigma_true, p)

    truth_eigenvalues = np.linalg.eigvalsh(0.5 * (true + true.T))
    if truth_eigenvalues[0] <= 0.0 or truth_eigenvalues[-1] / truth_eigenvalues[0] >= MAX_TRUTH_CONDITION:
        raise InvalidArgumentError(
            "true covariance is singular or ill-conditioned",
            details={"min_eigenvalue": float(truth_eigenvalues[0])},
        )

    try:
        ratios = scipy.linalg.eigh(0.5 * (est + est.T), 0.5 * (true + true.T), eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            "generalized eigendecomposition failed",
            details={"operation": "kl_divergence", "p": p},
        ) from exc

    if ratios[0] < -_NEGATIVE_EIGENVALUE_TOLERANCE * max(1.0, float(ratios[-1])):
        raise NumericFailureError(
            "estimated covariance is not positive semidefinite",
            details={"min_ratio": float(ratios[0])},
        )
    if ratios[0] <= 0.0:
        return math.inf

    return float(np.sum(ratios - np.log(ratios) - 1.0))


def cov_error(sigma_est: Any, sigma_true: Any, p: int) -> float:
    """Frobenius norm of the difference scaled by ``1 / p**2``."""
    est, true = _square_pair(sigma_est, sigma_true, p)
    return float(np.linalg.norm(est - true, ord="fro") / p**2)


def error_report(
    mu_est: Any,
    sigma_est: Any,
    mu_true: Any,
    sigma_true: Any,
    runtime_seconds: float = 0.0,
) -> ErrorReport:
    p = int(np.asarray(mu_true).size)
    return ErrorReport(
        e_mu=location_error(mu_est, mu_true),
        e_sigma=cov_error(sigma_est, sigma_true, p),
        e_kl=kl_divergence(sigma_est, sigma_true, p),
        runtime_seconds=max(0.0, runtime_seconds),
    )
