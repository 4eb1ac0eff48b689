"""Models of the JSON documents written by the CLI and the bench.

Each model's ``model_json_schema()`` is shipped under ``docs/schemas/`` and
can be regenerated with ``firpca schemas --out docs/schemas``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, Union

from pydantic import BaseModel, ConfigDict, Field

from ..core.simdata import SimSpec
from ..utils.logging_config import get_logger

logger = get_logger("documents")

MethodName = Literal["classical", "fdb", "fir"]
# non-finite values are written as strings, see benchmark.orchestrator._json_safe
JsonFloat = Union[float, Literal["inf", "-inf", "nan"]]


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid")

    def to_payload(self) -> Dict[str, Any]:
        """Plain dict for ``json.dump``; optional sections left as None are omitted."""
        return self.model_dump(exclude_none=True)


class EstimateConfig(_Document):
    """Parameters the estimate was run with."""

    method: MethodName
    alpha: float = Field(gt=0.0, lt=1.0)
    h: int = Field(ge=1, description="Target subset size floor(alpha * n)")
    batch_m: int = Field(ge=1)
    n_directions: int = Field(ge=1)
    seed: int = Field(ge=0)
    n: int = Field(ge=2)
    p: int = Field(ge=1)


class EstimateDocument(_Document):
    """Output of ``firpca estimate``."""

    mu: List[float] = Field(description="Location estimate, length p")
    sigma: List[List[float]] = Field(description="Covariance estimate, p x p")
    h_indices: List[int] = Field(description="0-based inlier subset rows, ascending")
    runtime_ms: float = Field(ge=0.0)
    config: EstimateConfig
    outliers_in_h: Optional[int] = Field(
        default=None, ge=0, description="Labeled outliers inside the subset; only with --labels"
    )


class PcaConfig(_Document):
    """PCA options plus the estimator parameters behind the model."""

    method: MethodName
    allow_wide: bool
    max_rank: Optional[int]
    n_components: Optional[int]
    explained_variance: Optional[float]
    variance_rule: Literal["eigenvalues", "squared"]
    center_rule: Literal["corrected", "literal"]
    od_transform: Literal["wilson_hilferty", "raw"]
    alpha: float = Field(gt=0.0, lt=1.0)
    batch_m: Optional[int]
    n_directions: int = Field(ge=1)
    seed: int = Field(ge=0)
    n: int = Field(ge=2)
    p: int = Field(ge=1)


class Detection(_Document):
    """Flags scored against a label file."""

    true_positives: int = Field(ge=0)
    false_positives: int = Field(ge=0)
    false_negatives: int = Field(ge=0)
    true_negatives: int = Field(ge=0)
    recall: float = Field(ge=0.0, le=1.0)
    false_positive_rate: float = Field(ge=0.0, le=1.0)


class PcaModelDocument(_Document):
    """``model.json`` written by ``firpca pca``."""

    method: MethodName
    loadings: List[List[float]] = Field(description="Orthonormal loading columns, p x r1")
    variances: List[float] = Field(description="Robust eigenvalues, descending")
    center: List[float]
    r0: int = Field(ge=1)
    r1: int = Field(ge=1)
    cutoff_sd: float = Field(ge=0.0)
    cutoff_od: float = Field(ge=0.0)
    n_flagged: int = Field(ge=0)
    h_indices: List[int]
    config: PcaConfig
    detection: Optional[Detection] = None

    def to_payload(self) -> Dict[str, Any]:
        # config carries meaningful nulls
        return self.model_dump(exclude={"detection"} if self.detection is None else None)


class TruthDocument(_Document):
    """``PREFIX.truth.json`` written by ``firpca simulate``."""

    spec: SimSpec
    n_outliers: int = Field(ge=0)
    true_mu: List[float]
    true_sigma: List[List[float]]
    mixing: List[List[float]]

    def to_payload(self) -> Dict[str, Any]:
        return self.model_dump()


class MetricSummary(_Document):
    mean: JsonFloat
    std: JsonFloat
    table: str = Field(description='Table cell such as "0.18 (0.06)"')


class CellSummary(_Document):
    """Aggregate of one (dataset, kind, eps, method) bench cell."""

    dataset: str
    kind: Literal["clean", "cluster", "radial", "point"]
    eps: float = Field(ge=0.0, lt=1.0)
    method: str = Field(description="Method label, fir@m for extra batch sizes")
    replications: int = Field(ge=0)
    succeeded: int = Field(ge=0)
    skipped: int = Field(ge=0)
    failed: int = Field(ge=0)
    e_mu: Optional[MetricSummary] = None
    e_sigma: Optional[MetricSummary] = None
    e_kl: Optional[MetricSummary] = None
    runtime_seconds: Optional[MetricSummary] = None
    outliers_in_h: Optional[float] = Field(default=None, ge=0.0, description="Mean labeled outliers in H")
    reasons: Optional[List[str]] = None


class BenchSummary(_Document):
    """``summary.json`` written by ``firpca bench``."""

    cells: List[CellSummary]
    any_succeeded: bool


DOCUMENT_MODELS: Dict[str, Type[_Document]] = {
    "estimate": EstimateDocument,
    "pca_model": PcaModelDocument,
    "bench_summary": BenchSummary,
    "truth": TruthDocument,
}


def schema_filename(name: str) -> str:
    return f"{name}.schema.json"


def write_schemas(out_dir: Path | str) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for name, model in DOCUMENT_MODELS.items():
        path = out_dir / schema_filename(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(model.model_json_schema(), f, indent=2, ensure_ascii=False)
            f.write("\n")
        written.append(path)
    logger.info("Wrote %d JSON schemas to %s", len(written), out_dir)
    return written
