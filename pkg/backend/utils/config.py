from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class EstimatorDefaults(BaseModel):

    alpha: float = Field(default=0.75, gt=0.0, lt=1.0)
    n_directions: int = Field(default=500, ge=1)
    box_expand: float = Field(default=0.5, ge=0.0)
    # batch size as a fraction of n when --batch is not given
    batch_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)


class BenchDefaults(BaseModel):

    threads: int = Field(default=0, ge=0)
    replications: int = Field(default=100, ge=1)


class LoggingConfig(BaseModel):

    level: str = "INFO"
    log_file: Optional[Path] = None
    structured: bool = False


class Config(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="FIR_", env_file=".env", extra="ignore")

    estimator: EstimatorDefaults = Field(default_factory=EstimatorDefaults)
    bench: BenchDefaults = Field(default_factory=BenchDefaults)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @model_validator(mode="before")
    @classmethod
    def apply_env_overrides(cls, values: Any) -> Any:
        if values is None:
            values = {}
        if not isinstance(values, dict):
            return values

        estimator = dict(values.get("estimator") or {})
        bench = dict(values.get("bench") or {})
        logging_cfg = dict(values.get("logging") or {})

        def _to_bool(raw: str) -> bool:
            return raw.strip().lower() in ("true", "1", "yes")

        if (threads := os.getenv("FIR_THREADS")) is not None and threads.strip():
            bench["threads"] = int(threads)

        if replications := os.getenv("FIR_REPLICATIONS"):
            bench["replications"] = int(replications)

        if directions := os.getenv("FIR_DIRECTIONS"):
            estimator["n_directions"] = int(directions)

        if alpha := os.getenv("FIR_ALPHA"):
            estimator["alpha"] = float(alpha)

        if log_level := os.getenv("FIR_LOG_LEVEL"):
            logging_cfg["level"] = log_level.upper()

        if log_file := os.getenv("FIR_LOG_FILE"):
            logging_cfg["log_file"] = Path(log_file)

        if structured := os.getenv("FIR_STRUCTURED_LOGS"):
            logging_cfg["structured"] = _to_bool(structured)

        values["estimator"] = estimator
        values["bench"] = bench
        values["logging"] = logging_cfg
        return values

    @classmethod
    def from_env(cls) -> Config:
        return cls()

    def worker_count(self) -> int:
        """Resolved bench worker count; 0 means one worker per CPU."""
        if self.bench.threads > 0:
            return self.bench.threads
        return max(1, os.cpu_count() or 1)


Config.model_rebuild()


_global_config: Optional[Config] = None


def get_config() -> Config:
    global _global_config
    if _global_config is None:
        try:
            _global_config = Config.from_env()
        except ValidationError as exc:
            raise RuntimeError(
                "Configuration validation failed. Check the FIR_* environment variables."
            ) from exc
    return _global_config


def set_config(config: Optional[Config]) -> None:
    global _global_config
    _global_config = config
