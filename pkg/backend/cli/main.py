from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from ..core.exceptions import FirError, InvalidArgumentError, InvalidStateError, NumericFailureError
from ..core.fir import FirConfig
from ..core.robust_pca import EstimateMethod, PcaOptions, RobustPcaModel, fit, run_estimator
from ..core.simdata import SIM_KINDS, SimSpec, generate
from ..core.validators import MatrixValidator, PathValidator
from ..reporting.documents import write_schemas
from ..reporting.exporters import ExportManager, estimate_document, pca_model_document, truth_document
from ..storage.datasets import read_labels, read_matrix
from ..utils.config import Config, get_config
from ..utils.logging_config import get_logger, setup_logging

logger = get_logger("cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_METHOD_CHOICES = ["classical", "cpca", "fdb", "fir"]


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=None, help="Random seed (default 0)")
    parent.add_argument("--directions", type=int, default=None, help="Number of projection directions")
    parent.add_argument("--alpha", type=float, default=None, help="Fraction of the data in the inlier subset")
    parent.add_argument("--batch", type=int, default=None, help="FIR batch size m")
    parent.add_argument("--out", type=Path, default=None, help="Output path or prefix")
    parent.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parent.add_argument("--log-file", type=Path, default=None, help="Also write logs to this file")
    parent.add_argument("--structured-logs", action="store_true", help="Emit JSON log lines")
    return parent


def _parse_args(argv: List[str]) -> argparse.Namespace:
    parent = _global_flags()
    parser = argparse.ArgumentParser(
        prog="firpca",
        description="Robust location, covariance and PCA with the FIR estimator",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    simulate = subparsers.add_parser("simulate", parents=[parent], help="Generate a labeled dataset")
    simulate.add_argument("--kind", choices=SIM_KINDS, default="clean")
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--p", type=int, required=True)
    simulate.add_argument("--eps", type=float, default=0.0, help="Outlier fraction")
    simulate.add_argument(
        "--r", type=float, default=None, help="Outlier distance parameter (default 8 for point, 2 otherwise)"
    )
    simulate.add_argument("--rank", type=int, default=None, help="Factor count for --kind lowrank")
    simulate.add_argument("--scale", type=float, default=20.0, help="Offset scale for --kind lowrank")

    estimate = subparsers.add_parser("estimate", parents=[parent], help="Robust mean and covariance of a CSV")
    estimate.add_argument("input", type=Path, help="Data CSV with a header row")
    estimate.add_argument("--method", choices=_METHOD_CHOICES, default="fir")
    estimate.add_argument("--labels", type=Path, default=None, help="Label CSV to cross-check the subset")

    pca = subparsers.add_parser("pca", parents=[parent], help="Robust PCA and outlier map of a CSV")
    pca.add_argument("input", type=Path, help="Data CSV with a header row")
    pca.add_argument("--method", choices=_METHOD_CHOICES, default="fir")
    pca.add_argument("--labels", type=Path, default=None, help="Label CSV to score the detection")
    pca.add_argument("--svg", type=Path, default=None, help="Write an outlier map scatter to this SVG")
    pca.add_argument("--allow-wide", action="store_true", help="Accept p >= n after rank reduction")
    pca.add_argument("--max-rank", type=int, default=None, help="Cap the preprocessing rank")
    pca.add_argument("--n-components", type=int, default=None)
    pca.add_argument("--explained-variance", type=float, default=None)
    pca.add_argument("--variance-rule", choices=["eigenvalues", "squared"], default="eigenvalues")
    pca.add_argument("--center-rule", choices=["corrected", "literal"], default="corrected")
    pca.add_argument("--od-transform", choices=["wilson_hilferty", "raw"], default="wilson_hilferty")

    bench = subparsers.add_parser("bench", parents=[parent], help="Run a Monte Carlo benchmark grid")
    bench.add_argument("config", type=Path, help="Bench config (YAML or JSON)")
    bench.add_argument("--replications", type=int, default=None, help="Override the config's replications")
    bench.add_argument("--threads", type=int, default=None, help="Worker count (0 = one per CPU)")

    timing = subparsers.add_parser("timing", parents=[parent], help="Time the estimators over growing n")
    timing.add_argument("--n", type=int, nargs="+", default=[1000, 2000, 4000])
    timing.add_argument("--p", type=int, default=40)
    timing.add_argument("--runs", type=int, default=3)
    timing.add_argument("--methods", choices=_METHOD_CHOICES, nargs="+", default=["fir"])

    subparsers.add_parser("schemas", parents=[parent], help="Write JSON schemas of every output document")

    return parser.parse_args(argv)


def _fir_config(args: argparse.Namespace, config: Config) -> FirConfig:
    return FirConfig(
        alpha=args.alpha if args.alpha is not None else config.estimator.alpha,
        batch_m=args.batch,
        n_directions=args.directions if args.directions is not None else config.estimator.n_directions,
        seed=args.seed if args.seed is not None else 0,
        box_expand=config.estimator.box_expand,
        batch_fraction=config.estimator.batch_fraction,
    )


def _load_input(path: Path) -> np.ndarray:
    X, _ = read_matrix(path)
    return MatrixValidator.validate(X, name=str(path), min_rows=2)


def cmd_simulate(args: argparse.Namespace, config: Config) -> int:
    if args.out is None:
        print("ERROR: simulate needs --out PREFIX", file=sys.stderr)
        return EXIT_INPUT

    spec = SimSpec.model_validate(
        {
            "n": args.n,
            "p": args.p,
            "eps": args.eps,
            "kind": args.kind,
            "r": args.r,
            "rank": args.rank,
            "scale": args.scale,
            "seed": args.seed if args.seed is not None else 0,
        }
    )
    data = generate(spec)

    prefix = str(args.out)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    ExportManager.export_matrix_csv(data.X, f"{prefix}.csv")
    ExportManager.export_labels_csv(data.labels, f"{prefix}.labels.csv")
    ExportManager.export_json(truth_document(spec, data), f"{prefix}.truth.json")

    print(f"Wrote {spec.n} x {spec.p} rows with {data.n_outliers} outliers to {prefix}.csv")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, config: Config) -> int:
    X = _load_input(args.input)
    n, p = X.shape
    if p >= n:
        print(f"ERROR: p exceeds n unsupported (n={n}, p={p})", file=sys.stderr)
        return EXIT_INPUT

    method = EstimateMethod.parse(args.method)
    fir_config = _fir_config(args, config)

    started = time.perf_counter()
    result = run_estimator(X, method, fir_config)
    runtime_ms = (time.perf_counter() - started) * 1000.0

    echo: Dict[str, Any] = {
        "method": method.value,
        "alpha": fir_config.alpha,
        "h": result.h,
        "batch_m": result.batch_m,
        "n_directions": fir_config.n_directions,
        "seed": fir_config.seed,
        "n": n,
        "p": p,
    }
    outliers_in_h: Optional[int] = None
    if args.labels is not None:
        labels = read_labels(args.labels, expected_rows=n)
        outliers_in_h = int(np.count_nonzero(labels[result.h_indices]))
    document = estimate_document(result, runtime_ms, echo, outliers_in_h)

    if args.out is not None:
        ExportManager.export_json(document, PathValidator.validate_output_path(args.out, (".json",)))
    else:
        print(json.dumps(document, indent=2))
    return EXIT_OK


def detection_summary(flags: np.ndarray, labels: np.ndarray) -> Dict[str, Any]:
    tp = int(np.count_nonzero(flags & labels))
    fp = int(np.count_nonzero(flags & ~labels))
    fn = int(np.count_nonzero(~flags & labels))
    tn = int(np.count_nonzero(~flags & ~labels))
    return {
        "true_positives": tp,
        "false_positives": fp,
        "false_negatives": fn,
        "true_negatives": tn,
        "recall": tp / (tp + fn) if tp + fn else 1.0,
        "false_positive_rate": fp / (fp + tn) if fp + tn else 0.0,
    }


def _write_pca_outputs(
    model: RobustPcaModel,
    out_dir: Path,
    document: Dict[str, Any],
    svg: Optional[Path],
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ExportManager.export_json(document, out_dir / "model.json")
    ExportManager.export_matrix_csv(model.scores, out_dir / "scores.csv", prefix="t")
    ExportManager.export_outlier_map_csv(model, out_dir / "outliermap.csv")
    if svg is not None:
        ExportManager.export_outlier_map_svg(model, svg, title=f"{model.method.value} outlier map")


def cmd_pca(args: argparse.Namespace, config: Config) -> int:
    X = _load_input(args.input)
    n, p = X.shape

    options = PcaOptions(
        method=EstimateMethod.parse(args.method),
        allow_wide=args.allow_wide,
        max_rank=args.max_rank,
        n_components=args.n_components,
        explained_variance=args.explained_variance,
        variance_rule=args.variance_rule,
        center_rule=args.center_rule,
        od_transform=args.od_transform,
    )
    if p >= n and not options.allow_wide:
        print(f"ERROR: p exceeds n unsupported (n={n}, p={p}); see --allow-wide", file=sys.stderr)
        return EXIT_INPUT
    svg = PathValidator.validate_output_path(args.svg, (".svg",)) if args.svg is not None else None

    fir_config = _fir_config(args, config)
    model = fit(X, options, fir_config)

    detection: Optional[Dict[str, Any]] = None
    if args.labels is not None:
        labels = read_labels(args.labels, expected_rows=n)
        detection = detection_summary(model.outlier_flags, labels)
    document = pca_model_document(
        model,
        {
            **options.model_dump(mode="json"),
            "alpha": fir_config.alpha,
            "batch_m": fir_config.batch_m,
            "n_directions": fir_config.n_directions,
            "seed": fir_config.seed,
            "n": n,
            "p": p,
        },
        detection,
    )

    _write_pca_outputs(model, args.out or Path("."), document, svg)
    print(f"Flagged {int(np.count_nonzero(model.outlier_flags))} of {n} rows (r0={model.r0}, r1={model.r1})")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace, config: Config) -> int:
    from benchmark.engine import load_bench_config
    from benchmark.orchestrator import execute_bench, write_bench_outputs

    bench_config = load_bench_config(args.config)
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.batch is not None:
        overrides["batch_m"] = args.batch
    if args.directions is not None:
        overrides["tau"] = args.directions
    if args.replications is not None:
        overrides["replications"] = args.replications
    if overrides:
        bench_config = bench_config.model_validate({**bench_config.model_dump(), **overrides})

    if args.threads is not None:
        config = config.model_copy(update={"bench": config.bench.model_copy(update={"threads": args.threads})})

    outcome = execute_bench(bench_config, workers=config.worker_count())
    paths = write_bench_outputs(outcome, args.out or Path("bench_out"))

    print(f"Wrote {len(outcome.records)} records to {paths['results']}")
    if not outcome.any_succeeded:
        print("ERROR: every bench cell failed or was skipped", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_timing(args: argparse.Namespace, config: Config) -> int:
    from benchmark.orchestrator import execute_timing

    methods = list(dict.fromkeys(EstimateMethod.parse(name) for name in args.methods))
    rows = execute_timing(sorted(set(args.n)), args.p, methods, args.runs, _fir_config(args, config))

    out_dir = args.out or Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    ExportManager.export_rows_csv(
        ["method", "n", "p", "runs", "mean_seconds"],
        ((row.method, row.n, row.p, row.runs, row.mean_seconds) for row in rows),
        out_dir / "timing.csv",
    )

    for method in methods:
        timed = [row for row in rows if row.method == method.value]
        if len(timed) >= 2 and timed[0].mean_seconds > 0.0:
            ratio = timed[-1].mean_seconds / timed[0].mean_seconds
            print(f"{method.value}: n={timed[-1].n} takes {ratio:.2f}x the time of n={timed[0].n}")
    return EXIT_OK



def cmd_schemas(args: argparse.Namespace, config: Config) -> int:
    paths = write_schemas(args.out or Path("docs/schemas"))
    print(f"Wrote {len(paths)} schemas to {paths[0].parent}")
    return EXIT_OK

_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "pca": cmd_pca,
    "bench": cmd_bench,
    "timing": cmd_timing,
    "schemas": cmd_schemas,
}


def main(argv: Optional[List[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]

    args = _parse_args(argv)

    if not args.command:
        print("ERROR: No command specified. Use --help for usage.", file=sys.stderr)
        return EXIT_INPUT

    try:
        config = get_config()
    except RuntimeError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_INPUT

    log_level = "DEBUG" if args.verbose else config.logging.level
    log_file = args.log_file or config.logging.log_file
    structured = args.structured_logs or config.logging.structured
    setup_logging(
        level=getattr(logging, log_level, logging.INFO),
        log_file=str(log_file) if log_file else None,
        structured=structured,
    )

    handler = _COMMANDS.get(args.command)
    if handler is None:
        print(f"ERROR: Unknown command: {args.command}", file=sys.stderr)
        return EXIT_INPUT

    try:
        return handler(args, config)
    except (InvalidArgumentError, ValidationError, OSError) as exc:
        _report(exc, structured)
        return EXIT_INPUT
    except (NumericFailureError, InvalidStateError) as exc:
        _report(exc, structured)
        return EXIT_NUMERIC


def _report(exc: Exception, structured: bool) -> None:
    message = exc.message if isinstance(exc, FirError) else str(exc)
    print(f"ERROR: {message}", file=sys.stderr)
    if structured and isinstance(exc, FirError):
        logger.error("Command failed", extra={"extra_data": exc.to_dict()})


if __name__ == "__main__":
    raise SystemExit(main())
