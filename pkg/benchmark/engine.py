from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from backend.core.exceptions import InvalidArgumentError
from backend.core.numerics import stream_id_for
from backend.core.robust_pca import EstimateMethod
from backend.utils.config import get_config
from backend.utils.logging_config import get_logger

logger = get_logger("benchmark.engine")

BenchKind = Literal["clean", "cluster", "radial", "point"]


class DatasetSpec(BaseModel):
    """A named simulation size."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(min_length=1)
    n: int = Field(ge=2)
    p: int = Field(ge=1)


_DATASETS: dict[str, DatasetSpec] = {
    "A": DatasetSpec(name="A", n=200, p=5),
    "B": DatasetSpec(name="B", n=300, p=20),
    "C": DatasetSpec(name="C", n=400, p=50),
    "D": DatasetSpec(name="D", n=1000, p=100),
}


@lru_cache(maxsize=32)
def get_dataset(name: str) -> DatasetSpec | None:
    dataset = _DATASETS.get(name.strip().upper())
    if dataset is None:
        logger.warning("No dataset registered as %s", name)
    return dataset


class MethodVariant(BaseModel):
    """An estimator plus the batch size it runs with; ``label`` keys records."""

    model_config = ConfigDict(frozen=True)

    label: str
    method: EstimateMethod
    batch_m: Optional[int] = None


class BenchConfig(BaseModel):
    datasets: list[DatasetSpec] = Field(default_factory=lambda: [_DATASETS["A"]], min_length=1)
    kinds: list[BenchKind] = Field(default_factory=lambda: ["clean"], min_length=1)
    eps_list: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    methods: list[Literal["classical", "fdb", "fir"]] = Field(
        default_factory=lambda: ["classical", "fdb", "fir"], min_length=1
    )
    batch_sizes: list[int] = Field(default_factory=list)
    replications: int = Field(default_factory=lambda: get_config().bench.replications, ge=1)
    alpha: float = Field(default=0.75, gt=0.0, lt=1.0)
    batch_m: Optional[int] = Field(default=None, ge=1)
    tau: int = Field(default=500, ge=1)
    r: Optional[float] = Field(default=None, ge=0.0)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    sigma_target: Literal["mixing", "covariance"] = "mixing"

    @field_validator("datasets", mode="before")
    @classmethod
    def resolve_named_datasets(cls, value: Any) -> Any:
        if not isinstance(value, list):
            return value
        resolved: list[Any] = []
        for entry in value:
            if isinstance(entry, str) or (isinstance(entry, dict) and set(entry) == {"name"}):
                name = entry if isinstance(entry, str) else entry["name"]
                dataset = get_dataset(str(name))
                if dataset is None:
                    raise ValueError(f"unknown dataset '{name}'; give n and p or use one of {sorted(_DATASETS)}")
                resolved.append(dataset)
            else:
                resolved.append(entry)
        return resolved

    @field_validator("eps_list")
    @classmethod
    def validate_eps(cls, value: list[float]) -> list[float]:
        for eps in value:
            if not 0.0 <= eps < 1.0:
                raise ValueError(f"eps {eps} outside [0, 1)")
        return sorted(set(value))

    @field_validator("batch_sizes")
    @classmethod
    def validate_batch_sizes(cls, value: list[int]) -> list[int]:
        if any(m < 2 for m in value):
            raise ValueError("batch sizes must be >= 2")
        return sorted(set(value))

    @model_validator(mode="after")
    def validate_unique_names(self) -> BenchConfig:
        names = [dataset.name for dataset in self.datasets]
        if len(names) != len(set(names)):
            raise ValueError("dataset names must be unique")
        return self


def load_bench_config(path: Path | str) -> BenchConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise InvalidArgumentError(f"Cannot parse bench config {path}: {exc}") from exc

    try:
        return BenchConfig.model_validate(raw or {})
    except ValidationError as exc:
        raise InvalidArgumentError(
            f"Invalid bench config {path}",
            details={"errors": exc.errors(include_url=False, include_context=False)},
        ) from exc


def method_variants(config: BenchConfig) -> list[MethodVariant]:
    variants: list[MethodVariant] = []
    for name in config.methods:
        method = EstimateMethod.parse(name)
        if method is EstimateMethod.FIR and config.batch_sizes:
            variants.extend(
                MethodVariant(label=f"fir@{m}", method=method, batch_m=m) for m in config.batch_sizes
            )
        else:
            batch = config.batch_m if method is EstimateMethod.FIR else None
            variants.append(MethodVariant(label=method.value, method=method, batch_m=batch))
    return variants


def cell_eps(config: BenchConfig, kind: str) -> list[float]:
    # clean data has no contamination to sweep
    return [0.0] if kind == "clean" else list(config.eps_list)


def expand_grid(config: BenchConfig) -> list[tuple[DatasetSpec, str, float, int]]:
    """Every (dataset, kind, eps, replication) draw; methods share each draw."""
    return [
        (dataset, kind, eps, rep)
        for dataset in config.datasets
        for kind in config.kinds
        for eps in cell_eps(config, kind)
        for rep in range(config.replications)
    ]


def replication_stream_id(base_seed: int, dataset: str, kind: str, eps: float, rep: int) -> int:
    return stream_id_for(base_seed, dataset, kind, float(eps), rep)
