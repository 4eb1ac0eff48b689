"""Projection depth over a finite set of unit directions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, List

import numpy as np

from ..utils.logging_config import get_logger
from .exceptions import InvalidArgumentError
from .numerics import DataMatrix, Vector
from .validators import MatrixValidator

logger = get_logger("depth")

DEGENERATE_MAD_TOLERANCE = 1e-12
_UNIT_NORM_TOLERANCE = 1e-8
_DIRECTION_CHUNK = 256


@dataclass(frozen=True)
class DepthResult:
    outlyingness: Vector
    depth: Vector
    directions_used: int


def _validate_directions(directions: Any, p: int) -> DataMatrix:
    D = MatrixValidator.validate(directions, name="directions")
    MatrixValidator.validate_columns(D, p, name="directions")
    norms = np.linalg.norm(D, axis=1)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > _UNIT_NORM_TOLERANCE:
        raise InvalidArgumentError(
            "directions must have unit-norm rows",
            details={"max_norm_deviation": worst},
        )
    return D


def projection_outlyingness(Z: Any, directions: Any) -> Vector:
    """Largest standardized deviation of each row over the given directions.

    A direction whose projections have zero mad contributes 0 for points at
    the projected median and +inf for every other point.
    """
    data = MatrixValidator.validate(Z, name="Z", min_rows=2)
    D = _validate_directions(directions, data.shape[1])

    outlyingness = np.zeros(data.shape[0])
    for start in range(0, D.shape[0], _DIRECTION_CHUNK):
        projections = data @ D[start : start + _DIRECTION_CHUNK].T
        centers = np.median(projections, axis=0)
        deviations = np.abs(projections - centers)
        spreads = np.median(deviations, axis=0)

        degenerate = spreads == 0.0
        safe_spreads = np.where(degenerate, 1.0, spreads)
        ratios = deviations / safe_spreads
        if np.any(degenerate):
            ratios[:, degenerate] = np.where(
                deviations[:, degenerate] <= DEGENERATE_MAD_TOLERANCE, 0.0, np.inf
            )

        np.maximum(outlyingness, ratios.max(axis=1), out=outlyingness)

    return outlyingness


def projection_depth(Z: Any, directions: Any) -> DepthResult:
    outlyingness = projection_outlyingness(Z, directions)
    # 1 / (1 + inf) is exactly 0
    depth = 1.0 / (1.0 + outlyingness)
    used = int(np.asarray(directions).shape[0])

    logger.debug(
        "Projection depth computed",
        extra={
            "extra_data": {
                "n": int(outlyingness.size),
                "directions": used,
                "infinite": int(np.count_nonzero(np.isinf(outlyingness))),
            }
        },
    )
    return DepthResult(outlyingness=outlyingness, depth=depth, directions_used=used)


def select_deepest(depths: Any, m: int) -> List[int]:
    """Indices of the ``m`` largest depths, ties to the smaller index, sorted."""
    values = np.asarray(depths, dtype=np.float64).ravel()
    n = values.size
    if not 1 <= m <= n:
        raise InvalidArgumentError(
            "m must satisfy 1 <= m <= n",
            details={"m": int(m), "n": int(n)},
        )

    order = np.lexsort((np.arange(n), -values))
    return sorted(int(i) for i in order[:m])
