"""Fast iterative robust location and covariance.

The estimator seeds an inlier set with the deepest points, then grows it one
batch at a time: the IPCA model of the current set scores every unselected
point, and the closest points that also fall inside the expanded bounding box
of the previous batch join the set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..utils.logging_config import get_logger
from .depth import projection_depth, select_deepest
from .exceptions import InvalidArgumentError, InvalidStateError, NumericFailureError
from .ipca import IpcaModel, ipca_init, ipca_project, ipca_update
from .numerics import DataMatrix, RngStream, Vector, sample_unit_directions, subset_moments
from .validators import MatrixValidator

logger = get_logger("fir")

BOX_AXES = 2
# keeps floor(alpha * n) exact for decimal alphas such as 0.57
_FLOOR_SLACK = 1e-9


def subset_size(alpha: float, n: int) -> int:
    return int(math.floor(alpha * n + _FLOOR_SLACK))


class FirConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=0.75, gt=0.0, lt=1.0)
    batch_m: Optional[int] = Field(default=None, ge=1)
    n_directions: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    stream_id: int = Field(default=0, ge=0, lt=2**64)
    box_expand: float = Field(default=0.5, ge=0.0)
    batch_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)

    def rng(self) -> RngStream:
        return RngStream(self.seed, self.stream_id)

    def resolve(self, n: int, p: int) -> Tuple[int, int]:
        """Concrete ``(h, m)`` for an ``n x p`` input."""
        if n < p + 2:
            raise InvalidArgumentError(
                "FIR needs at least p + 2 observations",
                details={"n": n, "p": p},
            )

        h = subset_size(self.alpha, n)
        if not 1 <= h < n:
            raise InvalidArgumentError("alpha gives an empty or full subset", details={"h": h, "n": n})

        m = self.batch_m if self.batch_m is not None else max(p + 1, round(self.batch_fraction * n))
        if not p < m < self.alpha * n:
            raise InvalidArgumentError(
                "batch size must satisfy p < m < alpha * n",
                details={"p": p, "m": m, "alpha_n": self.alpha * n},
            )

        if h < 0.5 * (p + n + 1):
            logger.warning(
                "Subset size %d is below the breakdown bound (p + n + 1) / 2 = %.1f",
                h,
                0.5 * (p + n + 1),
            )
        if h % m:
            logger.warning(
                "Batch size %d does not divide h = %d; the subset will hold %d points",
                m,
                h,
                m * (h // m),
            )
        return h, m


@dataclass(frozen=True)
class FirResult:
    mu: Vector
    sigma: DataMatrix
    h_indices: np.ndarray
    h: int
    batch_m: int

    @property
    def n_selected(self) -> int:
        return int(self.h_indices.size)


@dataclass(frozen=True)
class SelectionBox:
    lower: Vector
    upper: Vector

    @property
    def axes(self) -> int:
        return int(self.lower.size)

    def contains_rows(self, scores: DataMatrix) -> np.ndarray:
        leading = scores[:, : self.axes]
        return np.all((leading >= self.lower) & (leading <= self.upper), axis=1)


def scaled_distance(scores: Any, singular_values: Any) -> Vector:
    s = np.asarray(singular_values, dtype=np.float64).ravel()
    if s.size == 0:
        raise InvalidStateError("scaled distance is undefined for a rank-0 model")
    if np.any(s <= 0.0):
        raise InvalidArgumentError("singular values must be positive")

    T = np.asarray(scores, dtype=np.float64)
    if T.ndim != 2 or T.shape[1] != s.size:
        raise InvalidArgumentError(
            "scores must have one column per singular value",
            details={"shape": list(T.shape), "rank": int(s.size)},
        )
    return np.sum((T / s) ** 2, axis=1)


def selection_box(last_batch_scores: Any, expand: float = 0.5) -> SelectionBox:
    T = np.asarray(last_batch_scores, dtype=np.float64)
    if T.ndim != 2 or T.shape[0] < 1 or T.shape[1] < 1:
        raise InvalidArgumentError("selection box needs at least one score row and column")

    leading = T[:, : min(BOX_AXES, T.shape[1])]
    lo = leading.min(axis=0)
    hi = leading.max(axis=0)
    delta = expand * (hi - lo)
    return SelectionBox(lower=lo - delta, upper=hi + delta)


def box_contains(box: SelectionBox, score_row: Any) -> bool:
    row = np.asarray(score_row, dtype=np.float64).ravel()
    if row.size < box.axes:
        raise InvalidArgumentError("score row is shorter than the box", details={"axes": box.axes})
    return bool(box.contains_rows(row[np.newaxis, :])[0])


def _next_batch(
    model: IpcaModel,
    data: DataMatrix,
    last_batch: np.ndarray,
    in_h: np.ndarray,
    m: int,
    expand: float,
) -> Tuple[np.ndarray, int, int]:
    box = selection_box(ipca_project(model, data[last_batch]), expand)

    candidates = np.flatnonzero(~in_h)
    scores = ipca_project(model, data[candidates])
    distances = scaled_distance(scores, model.singular_values)
    inside = box.contains_rows(scores)

    # candidates are ascending, so a stable sort breaks distance ties by index
    order = np.argsort(distances, kind="stable")
    chosen = order[inside[order]][:m]
    shortfall = m - chosen.size
    if shortfall:
        chosen = np.concatenate([chosen, order[~inside[order]][:shortfall]])

    return candidates[chosen], int(np.count_nonzero(inside)), shortfall


def fir_estimate(Z: Any, config: FirConfig, directions: Optional[Any] = None) -> FirResult:
    """Robust mean and covariance from an iteratively grown inlier subset.

    When ``directions`` is omitted, ``config.n_directions`` unit directions
    are drawn from the config's random stream.
    """
    data = MatrixValidator.validate(Z, name="Z", min_rows=2)
    n, p = data.shape
    h, m = config.resolve(n, p)
    started = time.perf_counter()

    if directions is None:
        directions = sample_unit_directions(p, config.n_directions, config.rng())
    depth = projection_depth(data, directions)

    last_batch = np.asarray(select_deepest(depth.depth, m), dtype=np.intp)
    in_h = np.zeros(n, dtype=bool)
    in_h[last_batch] = True
    model = ipca_init(data[last_batch])

    iterations = h // m - 1
    for k in range(1, iterations + 1):
        if model.rank == 0:
            raise NumericFailureError(
                "IPCA rank collapsed: the selected points are identical",
                details={"iteration": k, "selected": int(np.count_nonzero(in_h))},
            )

        batch, in_box, shortfall = _next_batch(model, data, last_batch, in_h, m, config.box_expand)
        in_h[batch] = True
        if shortfall:
            logger.warning(
                "Selection box held %d candidates at iteration %d; filled %d by distance",
                in_box,
                k,
                shortfall,
            )
        logger.debug(
            "FIR iteration",
            extra={
                "extra_data": {
                    "k": k,
                    "selected": int(np.count_nonzero(in_h)),
                    "rank": model.rank,
                    "in_box": in_box,
                    "shortfall": shortfall,
                }
            },
        )

        # the model is not used after the last batch
        if k < iterations:
            model = ipca_update(model, data[batch])
        last_batch = batch

    h_indices = np.flatnonzero(in_h)
    mu, sigma = subset_moments(data, h_indices)

    logger.debug(
        "FIR estimate complete",
        extra={
            "extra_data": {
                "n": n,
                "p": p,
                "h": h,
                "batch_m": m,
                "selected": int(h_indices.size),
                "elapsed_ms": round((time.perf_counter() - started) * 1000.0, 3),
            }
        },
    )
    return FirResult(mu=mu, sigma=sigma, h_indices=h_indices, h=h, batch_m=m)
