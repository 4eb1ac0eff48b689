"""Shared numeric primitives: order statistics, decompositions, quantiles and
seeded random streams.

Every function here is pure. Random draws go through :class:`RngStream`, an
immutable ``(seed, stream_id)`` descriptor that builds a fresh counter-style
generator each time it is used, so parallel replications never share state.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Any, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.special
from numpy.typing import NDArray

from .exceptions import InvalidArgumentError, NumericFailureError
from .validators import MatrixValidator, ProbabilityValidator

DataMatrix = NDArray[np.float64]
Vector = NDArray[np.float64]

_UINT64_LIMIT = 2**64

# rational approximation coefficients for the standard-normal inverse CDF
_ACKLAM_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_ACKLAM_P_LOW = 0.02425


def stream_id_for(*parts: Any) -> int:
    """Stable 63-bit stream id derived from arbitrary labels."""
    payload = "\x1f".join(repr(part) for part in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class RngStream:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidArgumentError(f"{name} must be an integer", details={name: repr(value)})
            if not 0 <= int(value) < _UINT64_LIMIT:
                raise InvalidArgumentError(f"{name} must fit in 64 unsigned bits", details={name: int(value)})

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(sequence))

    def derive(self, *labels: Any) -> RngStream:
        return RngStream(self.seed, stream_id_for(self.stream_id, *labels))


def median(values: Any) -> float:
    vector = MatrixValidator.validate_vector(values, name="values")
    return float(np.median(vector))


def mad(values: Any) -> float:
    """Median absolute deviation from the median, without a consistency factor."""
    vector = MatrixValidator.validate_vector(values, name="values")
    center = np.median(vector)
    return float(np.median(np.abs(vector - center)))


def sample_unit_directions(p: int, count: int, rng: RngStream) -> DataMatrix:
    if p < 1 or count < 1:
        raise InvalidArgumentError(
            "directions need p >= 1 and count >= 1",
            details={"p": int(p), "count": int(count)},
        )

    draws = rng.generator().standard_normal((count, p))
    norms = np.linalg.norm(draws, axis=1)
    # a zero draw has probability zero; map it to the first axis
    zero_rows = norms == 0.0
    if np.any(zero_rows):
        draws[zero_rows] = 0.0
        draws[zero_rows, 0] = 1.0
        norms[zero_rows] = 1.0
    return draws / norms[:, np.newaxis]


def svd_thin(matrix: Any) -> Tuple[DataMatrix, Vector, DataMatrix]:
    """Thin SVD returning ``(U, s, V)`` with ``M = U @ diag(s) @ V.T``."""
    M = MatrixValidator.validate(matrix, name="matrix")
    try:
        U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericFailureError(
                "SVD did not converge",
                details={"operation": "svd_thin", "shape": list(M.shape)},
            ) from exc
    return U, s, Vt.T


def sym_eig(matrix: Any) -> Tuple[DataMatrix, Vector]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    S = MatrixValidator.validate(matrix, name="matrix")
    if S.shape[0] != S.shape[1]:
        raise InvalidArgumentError("matrix must be square", details={"shape": list(S.shape)})

    scale = max(1.0, float(np.max(np.abs(S))))
    asymmetry = float(np.max(np.abs(S - S.T)))
    if asymmetry > 1e-10 * scale:
        raise InvalidArgumentError("matrix is not symmetric", details={"asymmetry": asymmetry})

    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            "symmetric eigendecomposition did not converge",
            details={"operation": "sym_eig", "shape": list(S.shape)},
        ) from exc
    return eigenvectors[:, ::-1], eigenvalues[::-1]


def subset_moments(Z: DataMatrix, indices: Any) -> Tuple[Vector, DataMatrix]:
    """Mean and unbiased covariance of the rows of ``Z`` selected by ``indices``."""
    rows = Z[np.asarray(indices, dtype=np.intp)]
    if rows.shape[0] < 2:
        raise InvalidArgumentError(
            "covariance needs at least two rows",
            details={"rows": int(rows.shape[0])},
        )
    mu = rows.mean(axis=0)
    centered = rows - mu
    sigma = centered.T @ centered / (rows.shape[0] - 1)
    return mu, 0.5 * (sigma + sigma.T)


def chi2_quantile(dof: int, prob: float) -> float:
    if int(dof) != dof or dof < 1:
        raise InvalidArgumentError("dof must be a positive integer", details={"dof": dof})
    prob = ProbabilityValidator.validate_open(prob)
    shape = 0.5 * int(dof)

    def excess(x: float) -> float:
        return float(scipy.special.gammainc(shape, 0.5 * x)) - prob

    upper = max(1.0, float(dof))
    while excess(upper) < 0.0:
        upper *= 2.0
        if upper > 1e12:
            raise NumericFailureError("chi-square quantile bracket diverged", details={"dof": dof, "prob": prob})
    if excess(upper) == 0.0:
        return upper

    return float(scipy.optimize.bisect(excess, 0.0, upper, xtol=1e-10, maxiter=500))


def _lower_gaussian_quantile(prob: float) -> float:
    if prob < _ACKLAM_P_LOW:
        q = math.sqrt(-2.0 * math.log(prob))
        c, d = _ACKLAM_C, _ACKLAM_D
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    else:
        q = prob - 0.5
        r = q * q
        a, b = _ACKLAM_A, _ACKLAM_B
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )

    # one Newton step against the erf-based CDF
    error = float(scipy.special.ndtr(x)) - prob
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if density > 0.0:
        x -= error / density
    return x


def gaussian_quantile(prob: float) -> float:
    prob = ProbabilityValidator.validate_open(prob)
    if prob == 0.5:
        return 0.0
    if prob > 0.5:
        return -_lower_gaussian_quantile(1.0 - prob)
    return _lower_gaussian_quantile(prob)
