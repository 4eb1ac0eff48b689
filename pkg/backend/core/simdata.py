"""Simulated datasets with known truth.

Inliers are correlated Gaussians ``x = G y`` with ``y ~ N(0, I)``; a fixed
fraction of rows, at random positions, is replaced by one of the
contamination models below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import InvalidArgumentError
from .numerics import DataMatrix, RngStream, Vector

SimKind = Literal["clean", "cluster", "radial", "point", "lowrank"]
SIM_KINDS: tuple[str, ...] = ("clean", "cluster", "radial", "point", "lowrank")

OFF_DIAGONAL = 0.75
POINT_SPREAD = 0.01
RADIAL_VARIANCE = 5.0
_COUNT_SLACK = 1e-9

DEFAULT_DISTANCE = 2.0
# Point masses at r <= 5 sit on the smallest eigen-direction of G G^T and
# come out deeper than the inliers under projection depth.
POINT_DISTANCE = 8.0


def default_distance(kind: str) -> float:
    return POINT_DISTANCE if kind == "point" else DEFAULT_DISTANCE


class SimSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)
    p: int = Field(ge=1)
    eps: float = Field(default=0.0, ge=0.0, lt=1.0)
    kind: SimKind = "clean"
    r: float = Field(default=DEFAULT_DISTANCE, ge=0.0)
    rank: Optional[int] = Field(default=None, ge=1)
    scale: float = Field(default=20.0, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    stream_id: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="before")
    @classmethod
    def _fill_distance(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("r") is None:
            data = {**data, "r": default_distance(str(data.get("kind", "clean")))}
        return data

    @model_validator(mode="after")
    def _kind_rules(self) -> SimSpec:
        if self.kind == "clean" and self.eps != 0.0:
            raise ValueError("kind 'clean' requires eps = 0")
        if self.kind == "lowrank" and (self.rank is None or self.rank >= self.p):
            raise ValueError("kind 'lowrank' requires 1 <= rank < p")
        if self.kind == "point" and self.p < 2:
            raise ValueError("kind 'point' requires p >= 2")
        return self

    def rng(self) -> RngStream:
        return RngStream(self.seed, self.stream_id)


@dataclass(frozen=True)
class LabeledData:
    X: DataMatrix
    labels: np.ndarray
    true_mu: Vector
    true_sigma: DataMatrix
    mixing: DataMatrix

    @property
    def n_outliers(self) -> int:
        return int(np.count_nonzero(self.labels))


def outlier_count(eps: float, n: int) -> int:
    return int(math.floor(eps * n + _COUNT_SLACK))


def make_G(p: int) -> DataMatrix:
    if p < 1:
        raise InvalidArgumentError("p must be >= 1", details={"p": p})
    G = np.full((p, p), OFF_DIAGONAL)
    np.fill_diagonal(G, 1.0)
    return G


def point_direction(p: int) -> Vector:
    """Unit vector orthogonal to the all-ones vector: e1 minus its mean, normalized."""
    if p < 2:
        raise InvalidArgumentError("no direction orthogonal to ones exists for p < 2", details={"p": p})
    a = np.full(p, -1.0 / p)
    a[0] += 1.0
    return a / np.linalg.norm(a)


def _outlier_rows(generator: np.random.Generator, n: int, count: int) -> np.ndarray:
    labels = np.zeros(n, dtype=bool)
    if count:
        labels[generator.choice(n, size=count, replace=False)] = True
    return labels


def generate(spec: SimSpec) -> LabeledData:
    if spec.kind == "lowrank":
        return generate_lowrank(spec.n, spec.p, spec.rank or 1, spec.eps, spec.scale, spec.rng())

    generator = spec.rng().generator()
    n, p = spec.n, spec.p
    labels = _outlier_rows(generator, n, outlier_count(spec.eps, n))
    count = int(np.count_nonzero(labels))

    Y = generator.standard_normal((n, p))
    if count:
        if spec.kind == "point":
            center = spec.r * math.sqrt(p) * point_direction(p)
            Y[labels] = center + POINT_SPREAD * generator.standard_normal((count, p))
        elif spec.kind == "cluster":
            center = spec.r * p ** -0.25 * np.ones(p)
            Y[labels] = center + generator.standard_normal((count, p))
        elif spec.kind == "radial":
            Y[labels] = math.sqrt(RADIAL_VARIANCE) * generator.standard_normal((count, p))

    G = make_G(p)
    return LabeledData(
        X=Y @ G.T,
        labels=labels,
        true_mu=np.zeros(p),
        true_sigma=G @ G.T,
        mixing=G,
    )


def generate_lowrank(
    n: int,
    p: int,
    rank: int,
    eps: float,
    scale: float = 20.0,
    rng: Optional[RngStream] = None,
) -> LabeledData:
    """Rank-``rank`` product data with ``scale * |y|`` added to outlier rows."""
    if not 1 <= rank < p:
        raise InvalidArgumentError("low-rank data needs 1 <= rank < p", details={"rank": rank, "p": p})
    if not 0.0 <= eps < 1.0:
        raise InvalidArgumentError("eps must lie in [0, 1)", details={"eps": eps})

    generator = (rng or RngStream()).generator()
    labels = _outlier_rows(generator, n, outlier_count(eps, n))
    count = int(np.count_nonzero(labels))

    U = generator.standard_normal((n, rank))
    V = generator.standard_normal((rank, p))
    X = U @ V
    if count:
        X[labels] += scale * np.abs(generator.standard_normal((count, p)))

    truth = V.T @ V
    return LabeledData(X=X, labels=labels, true_mu=np.zeros(p), true_sigma=truth, mixing=truth.copy())
