"""Monte Carlo benchmark harness for the robust estimators.

``engine`` holds the bench configuration models, the named dataset registry
and the grid expansion; ``orchestrator`` runs replications in parallel and
writes per-record results and per-cell summaries.
"""

from benchmark.engine import BenchConfig, DatasetSpec, get_dataset, load_bench_config
from benchmark.orchestrator import (
    BenchOutcome,
    RunRecord,
    execute_bench,
    execute_timing,
    summarize,
    write_bench_outputs,
)

__all__ = [
    "BenchConfig",
    "BenchOutcome",
    "DatasetSpec",
    "RunRecord",
    "execute_bench",
    "execute_timing",
    "get_dataset",
    "load_bench_config",
    "summarize",
    "write_bench_outputs",
]
