from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel

from backend.core.exceptions import FirError, InvalidArgumentError
from backend.core.fir import FirConfig
from backend.core.metrics import error_report
from backend.core.numerics import RngStream, stream_id_for
from backend.core.robust_pca import EstimateMethod, run_estimator
from backend.core.simdata import SimSpec, generate
from backend.reporting.documents import BenchSummary, CellSummary
from backend.reporting.exporters import ExportManager
from backend.utils.logging_config import get_logger
from benchmark.engine import (
    BenchConfig,
    DatasetSpec,
    MethodVariant,
    expand_grid,
    method_variants,
    replication_stream_id,
)

logger = get_logger("benchmark.orchestrator")

RESULT_COLUMNS = (
    "dataset",
    "kind",
    "eps",
    "method",
    "replication",
    "status",
    "e_mu",
    "e_sigma",
    "e_kl",
    "outliers_in_h",
    "reason",
)
TIMING_COLUMNS = ("dataset", "kind", "eps", "method", "replication", "runtime_seconds")


class RunRecord(BaseModel):
    """One estimator run on one replication of one grid cell."""

    method: str
    dataset: str
    kind: str
    eps: float
    replication: int
    status: Literal["ok", "skipped", "error"]
    e_mu: Optional[float] = None
    e_sigma: Optional[float] = None
    e_kl: Optional[float] = None
    runtime_seconds: float = 0.0
    outliers_in_h: Optional[int] = None
    reason: str = ""

    def sort_key(self) -> tuple[str, str, float, str, int]:
        return (self.dataset, self.kind, self.eps, self.method, self.replication)


class BenchOutcome(BaseModel):
    records: list[RunRecord]

    @property
    def any_succeeded(self) -> bool:
        return any(record.status == "ok" for record in self.records)


def _fir_config(config: BenchConfig, variant: MethodVariant, stream_id: int) -> FirConfig:
    return FirConfig(
        alpha=config.alpha,
        batch_m=variant.batch_m,
        n_directions=config.tau,
        seed=config.base_seed,
        stream_id=stream_id,
    )


def run_replication(
    config: BenchConfig,
    variants: list[MethodVariant],
    dataset: DatasetSpec,
    kind: str,
    eps: float,
    rep: int,
) -> list[RunRecord]:
    """Run every method variant on a single simulated draw."""
    stream_id = replication_stream_id(config.base_seed, dataset.name, kind, eps, rep)
    spec = SimSpec.model_validate(
        {
            "n": dataset.n,
            "p": dataset.p,
            "eps": eps,
            "kind": kind,
            "r": config.r,
            "seed": config.base_seed,
            "stream_id": stream_id,
        }
    )
    data = generate(spec)
    truth = data.mixing if config.sigma_target == "mixing" else data.true_sigma
    # directions come from a sibling stream so they differ from the data draws
    direction_stream = RngStream(config.base_seed, stream_id).derive("directions").stream_id

    records: list[RunRecord] = []
    for variant in variants:
        base = dict(method=variant.label, dataset=dataset.name, kind=kind, eps=eps, replication=rep)
        fir_config = _fir_config(config, variant, direction_stream)
        try:
            started = time.perf_counter()
            result = run_estimator(data.X, variant.method, fir_config)
            elapsed = time.perf_counter() - started
            report = error_report(result.mu, result.sigma, data.true_mu, truth, elapsed)
        except InvalidArgumentError as exc:
            records.append(RunRecord(**base, status="skipped", reason=exc.message))
            continue
        except FirError as exc:
            logger.warning(
                "Bench cell failed",
                extra={"extra_data": {**base, "error": exc.to_dict()}},
            )
            records.append(RunRecord(**base, status="error", reason=exc.message))
            continue

        records.append(
            RunRecord(
                **base,
                status="ok",
                e_mu=report.e_mu,
                e_sigma=report.e_sigma,
                e_kl=report.e_kl,
                runtime_seconds=report.runtime_seconds,
                outliers_in_h=int(np.count_nonzero(data.labels[result.h_indices])),
            )
        )
    return records


def execute_bench(config: BenchConfig, workers: int = 1) -> BenchOutcome:
    variants = method_variants(config)
    tasks = expand_grid(config)
    started = time.perf_counter()

    logger.info(
        "Bench started",
        extra={
            "extra_data": {
                "draws": len(tasks),
                "methods": [variant.label for variant in variants],
                "workers": workers,
            }
        },
    )

    def _run(task: tuple[DatasetSpec, str, float, int]) -> list[RunRecord]:
        dataset, kind, eps, rep = task
        return run_replication(config, variants, dataset, kind, eps, rep)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run, tasks))
    else:
        batches = [_run(task) for task in tasks]

    records = sorted((record for batch in batches for record in batch), key=RunRecord.sort_key)

    logger.info(
        "Bench finished",
        extra={
            "extra_data": {
                "records": len(records),
                "ok": sum(record.status == "ok" for record in records),
                "elapsed_seconds": round(time.perf_counter() - started, 3),
            }
        },
    )
    return BenchOutcome(records=records)


def _mean_std(values: list[float]) -> tuple[float, float]:
    array = np.asarray(values, dtype=np.float64)
    return float(np.mean(array)), float(np.std(array, ddof=0))


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.2f} ({std:.2f})"


def summarize(outcome: BenchOutcome) -> dict[str, Any]:
    cells: dict[tuple[str, str, float, str], list[RunRecord]] = {}
    for record in outcome.records:
        cells.setdefault((record.dataset, record.kind, record.eps, record.method), []).append(record)

    summary: list[CellSummary] = []
    for (dataset, kind, eps, method), records in cells.items():
        ok = [record for record in records if record.status == "ok"]
        entry: dict[str, Any] = {
            "dataset": dataset,
            "kind": kind,
            "eps": eps,
            "method": method,
            "replications": len(records),
            "succeeded": len(ok),
            "skipped": sum(record.status == "skipped" for record in records),
            "failed": sum(record.status == "error" for record in records),
        }
        if ok:
            for metric in ("e_mu", "e_sigma", "e_kl", "runtime_seconds"):
                mean, std = _mean_std([getattr(record, metric) for record in ok])
                entry[metric] = {"mean": mean, "std": std, "table": format_cell(mean, std)}
            entry["outliers_in_h"] = _mean_std([float(record.outliers_in_h or 0) for record in ok])[0]
        reasons = sorted({record.reason for record in records if record.reason})
        if reasons:
            entry["reasons"] = reasons
        summary.append(CellSummary.model_validate(entry))

    return BenchSummary(cells=summary, any_succeeded=outcome.any_succeeded).to_payload()


def _csv_value(value: Optional[float]) -> Any:
    if value is None:
        return ""
    return float(value)


def write_bench_outputs(outcome: BenchOutcome, out_dir: Path | str) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out_dir / "results.csv",
        "timings": out_dir / "timings.csv",
        "summary": out_dir / "summary.json",
    }

    ExportManager.export_rows_csv(
        RESULT_COLUMNS,
        (
            (
                r.dataset,
                r.kind,
                float(r.eps),
                r.method,
                r.replication,
                r.status,
                _csv_value(r.e_mu),
                _csv_value(r.e_sigma),
                _csv_value(r.e_kl),
                "" if r.outliers_in_h is None else r.outliers_in_h,
                r.reason,
            )
            for r in outcome.records
        ),
        paths["results"],
    )
    ExportManager.export_rows_csv(
        TIMING_COLUMNS,
        (
            (r.dataset, r.kind, float(r.eps), r.method, r.replication, float(r.runtime_seconds))
            for r in outcome.records
        ),
        paths["timings"],
    )

    summary = summarize(outcome)
    ExportManager.export_json(_json_safe(summary), paths["summary"])
    return paths


def _json_safe(value: Any) -> Any:
    # infinite KL values (singular estimates) are not valid JSON numbers
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_json_safe(item) for item in value]
    return value


class TimingRow(BaseModel):
    method: str
    n: int
    p: int
    runs: int
    mean_seconds: float


def execute_timing(
    ns: list[int],
    p: int,
    methods: list[EstimateMethod],
    runs: int,
    base_config: FirConfig,
) -> list[TimingRow]:
    """Average wall time of each method over clean draws of growing size."""
    rows: list[TimingRow] = []
    for n in ns:
        for method in methods:
            elapsed: list[float] = []
            for run in range(runs):
                stream_id = stream_id_for(base_config.seed, "timing", n, p, run)
                data = generate(SimSpec(n=n, p=p, seed=base_config.seed, stream_id=stream_id))
                config = base_config.model_copy(update={"stream_id": stream_id})
                started = time.perf_counter()
                run_estimator(data.X, method, config)
                elapsed.append(time.perf_counter() - started)
            rows.append(
                TimingRow(method=method.value, n=n, p=p, runs=runs, mean_seconds=float(np.mean(elapsed)))
            )
            logger.info("Timed %s at n=%d, p=%d: %.4fs", method.value, n, p, rows[-1].mean_seconds)
    return rows
