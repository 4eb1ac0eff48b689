"""Mean-aware incremental PCA.

Singular values are stored normalized by the square root of the number of
absorbed rows, so they are the standard deviations along each component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .exceptions import InvalidArgumentError
from .numerics import DataMatrix, Vector, svd_thin
from .validators import MatrixValidator

RELATIVE_RANK_TOLERANCE = 1e-8
ABSOLUTE_RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class IpcaModel:
    mean: Vector
    singular_values: Vector
    components: DataMatrix
    n_seen: int

    def __post_init__(self) -> None:
        for array in (self.mean, self.singular_values, self.components):
            array.setflags(write=False)

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    @property
    def n_features(self) -> int:
        return int(self.mean.size)


def _truncate(s: Vector, V: DataMatrix) -> tuple[Vector, DataMatrix]:
    if s.size == 0 or s[0] <= 0.0:
        return s[:0].copy(), np.zeros((0, V.shape[0]))
    threshold = max(RELATIVE_RANK_TOLERANCE * s[0], ABSOLUTE_RANK_TOLERANCE)
    keep = int(np.count_nonzero(s > threshold))
    return s[:keep].copy(), np.ascontiguousarray(V[:, :keep].T)


def ipca_init(batch: Any) -> IpcaModel:
    rows = MatrixValidator.validate(batch, name="batch")
    m = rows.shape[0]
    mean = rows.mean(axis=0)

    _, s, V = svd_thin((rows - mean) / math.sqrt(m))
    singular_values, components = _truncate(s, V)
    return IpcaModel(mean=mean, singular_values=singular_values, components=components, n_seen=m)


def ipca_update(model: IpcaModel, batch: Any) -> IpcaModel:
    rows = MatrixValidator.validate(batch, name="batch")
    MatrixValidator.validate_columns(rows, model.n_features, name="batch")

    n, m = model.n_seen, rows.shape[0]
    total = n + m
    batch_mean = rows.mean(axis=0)

    # scaled old basis, centered new rows, and the mean-shift correction row
    augmented = np.vstack(
        [
            math.sqrt(n) * model.singular_values[:, np.newaxis] * model.components,
            rows - batch_mean,
            math.sqrt(n * m / total) * (model.mean - batch_mean)[np.newaxis, :],
        ]
    )
    _, s, V = svd_thin(augmented)
    singular_values, components = _truncate(s / math.sqrt(total), V)

    mean = (n * model.mean + m * batch_mean) / total
    return IpcaModel(mean=mean, singular_values=singular_values, components=components, n_seen=total)


def ipca_project(model: IpcaModel, points: Any) -> DataMatrix:
    rows = np.asarray(points, dtype=np.float64)
    if rows.ndim != 2:
        raise InvalidArgumentError("points must be a 2-D matrix", details={"ndim": int(rows.ndim)})
    MatrixValidator.validate_columns(rows, model.n_features, name="points")
    return (rows - model.mean) @ model.components.T
