from __future__ import annotations

import json

import numpy as np
import pytest
from pydantic import ValidationError

from backend.cli.main import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, detection_summary, main
from backend.reporting.documents import (
    DOCUMENT_MODELS,
    BenchSummary,
    EstimateDocument,
    PcaModelDocument,
    TruthDocument,
    schema_filename,
)
from backend.storage.datasets import read_labels, read_matrix


def _simulate(tmp_path, name, *flags):
    prefix = tmp_path / name
    assert main(["simulate", "--out", str(prefix), *flags]) == EXIT_OK
    return prefix


def _write_csv(path, rows, header):
    lines = [",".join(header)] + [",".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestSimulate:

    def test_point_dataset(self, tmp_path):
        prefix = _simulate(tmp_path, "point", "--kind", "point", "--n", "1000", "--p", "10", "--eps", "0.4", "--seed", "7")
        X, header = read_matrix(f"{prefix}.csv")
        assert X.shape == (1000, 10)
        assert header[0] == "x1" and header[-1] == "x10"
        assert int(read_labels(f"{prefix}.labels.csv").sum()) == 400
        truth = json.loads((tmp_path / "point.truth.json").read_text(encoding="utf-8"))
        assert truth["n_outliers"] == 400
        assert truth["spec"]["r"] == 8.0
        assert len(truth["true_sigma"]) == 10

    def test_clean_labels(self, tmp_path):
        prefix = _simulate(tmp_path, "clean", "--n", "50", "--p", "3")
        assert not np.any(read_labels(f"{prefix}.labels.csv"))

    def test_byte_identical_reruns(self, tmp_path):
        flags = ("--kind", "cluster", "--n", "80", "--p", "4", "--eps", "0.1", "--seed", "3")
        first = _simulate(tmp_path, "a", *flags)
        second = _simulate(tmp_path, "b", *flags)
        for suffix in (".csv", ".labels.csv"):
            assert open(f"{first}{suffix}", "rb").read() == open(f"{second}{suffix}", "rb").read()

    def test_requires_out(self, capsys):
        assert main(["simulate", "--n", "10", "--p", "2"]) == EXIT_INPUT
        assert "--out" in capsys.readouterr().err

    def test_invalid_spec(self):
        assert main(["simulate", "--out", "unused", "--n", "10", "--p", "2", "--eps", "0.2"]) == EXIT_INPUT


class TestEstimate:

    def test_classical_recovers_file_moments(self, tmp_path):
        prefix = _simulate(tmp_path, "data", "--n", "200", "--p", "5", "--seed", "1")
        out = tmp_path / "estimate.json"
        assert main(["estimate", f"{prefix}.csv", "--method", "classical", "--out", str(out)]) == EXIT_OK

        document = json.loads(out.read_text(encoding="utf-8"))
        X, _ = read_matrix(f"{prefix}.csv")
        assert document["h_indices"] == list(range(200))
        assert document["mu"] == X.mean(axis=0).tolist()
        assert np.allclose(document["sigma"], np.cov(X, rowvar=False), atol=1e-14)
        assert document["config"]["method"] == "classical"

    def test_fir_prints_json(self, tmp_path, capsys):
        prefix = _simulate(tmp_path, "data", "--n", "200", "--p", "5", "--seed", "2")
        capsys.readouterr()
        assert main(["estimate", f"{prefix}.csv", "--directions", "100"]) == EXIT_OK
        document = json.loads(capsys.readouterr().out)
        assert len(document["mu"]) == 5
        assert len(document["h_indices"]) == 140
        assert document["config"]["h"] == 150
        assert document["config"]["batch_m"] == 20

    def test_fir_subset_avoids_labeled_outliers(self, tmp_path):
        prefix = _simulate(tmp_path, "point", "--kind", "point", "--n", "1000", "--p", "10", "--eps", "0.4", "--seed", "7")
        out = tmp_path / "estimate.json"
        code = main(
            [
                "estimate",
                f"{prefix}.csv",
                "--alpha",
                "0.5",
                "--batch",
                "100",
                "--labels",
                f"{prefix}.labels.csv",
                "--out",
                str(out),
            ]
        )
        assert code == EXIT_OK
        assert json.loads(out.read_text(encoding="utf-8"))["outliers_in_h"] == 0

    def test_pipeline_is_deterministic(self, tmp_path):
        documents = []
        for run in range(2):
            prefix = _simulate(tmp_path, f"run{run}", "--kind", "radial", "--n", "150", "--p", "4", "--eps", "0.1")
            out = tmp_path / f"run{run}.json"
            assert main(["estimate", f"{prefix}.csv", "--seed", "5", "--out", str(out)]) == EXIT_OK
            document = json.loads(out.read_text(encoding="utf-8"))
            document.pop("runtime_ms")
            documents.append(document)
        assert documents[0] == documents[1]

    def test_wide_input_rejected(self, tmp_path, capsys):
        path = _write_csv(tmp_path / "wide.csv", np.ones((3, 5)), ["a", "b", "c", "d", "e"])
        assert main(["estimate", str(path)]) == EXIT_INPUT
        assert "p exceeds n unsupported" in capsys.readouterr().err

    def test_malformed_csv(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n3,x\n", encoding="utf-8")
        assert main(["estimate", str(path)]) == EXIT_INPUT
        assert "line 3, column 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "absent.csv")]) == EXIT_INPUT

    def test_rank_collapse_is_numeric_failure(self, tmp_path, capsys):
        values = np.concatenate([np.zeros(30), np.arange(1.0, 11.0)])[:, np.newaxis]
        path = _write_csv(tmp_path / "collapse.csv", values, ["x1"])
        assert main(["estimate", str(path), "--batch", "10"]) == EXIT_NUMERIC
        assert "rank collapsed" in capsys.readouterr().err

    def test_wrong_output_suffix(self, tmp_path):
        prefix = _simulate(tmp_path, "data", "--n", "60", "--p", "2")
        assert main(["estimate", f"{prefix}.csv", "--out", str(tmp_path / "result.txt")]) == EXIT_INPUT


class TestPca:

    def test_lowrank_outlier_map(self, tmp_path):
        prefix = _simulate(
            tmp_path, "lowrank", "--kind", "lowrank", "--n", "300", "--p", "10", "--rank", "2", "--eps", "0.1"
        )
        out_dir = tmp_path / "pca"
        svg = tmp_path / "map.svg"
        code = main(
            [
                "pca",
                f"{prefix}.csv",
                "--alpha",
                "0.85",
                "--batch",
                "15",
                "--labels",
                f"{prefix}.labels.csv",
                "--svg",
                str(svg),
                "--out",
                str(out_dir),
            ]
        )
        assert code == EXIT_OK
        model = json.loads((out_dir / "model.json").read_text(encoding="utf-8"))
        assert model["method"] == "fir"
        assert model["detection"]["recall"] >= 0.9
        assert len(model["loadings"]) == 10

        scores, header = read_matrix(out_dir / "scores.csv")
        assert scores.shape == (300, model["r1"])
        assert header[0] == "t1"
        outlier_map = (out_dir / "outliermap.csv").read_text(encoding="utf-8").splitlines()
        assert outlier_map[0] == "index,sd,od,flag"
        assert len(outlier_map) == 301
        assert svg.read_text(encoding="utf-8").count("<circle") == 300

    def test_wide_requires_flag(self, tmp_path):
        path = _write_csv(tmp_path / "wide.csv", np.random.default_rng(0).standard_normal((20, 30)), [f"x{j}" for j in range(30)])
        assert main(["pca", str(path), "--out", str(tmp_path / "a")]) == EXIT_INPUT
        code = main(["pca", str(path), "--allow-wide", "--max-rank", "5", "--out", str(tmp_path / "b")])
        assert code == EXIT_OK
        assert json.loads((tmp_path / "b" / "model.json").read_text(encoding="utf-8"))["r0"] == 5

    def test_svg_suffix_checked(self, tmp_path):
        prefix = _simulate(tmp_path, "data", "--n", "60", "--p", "3")
        assert main(["pca", f"{prefix}.csv", "--svg", str(tmp_path / "map.png"), "--out", str(tmp_path)]) == EXIT_INPUT

    def test_conflicting_component_options(self, tmp_path):
        prefix = _simulate(tmp_path, "data", "--n", "60", "--p", "3")
        code = main(["pca", f"{prefix}.csv", "--n-components", "1", "--explained-variance", "0.9"])
        assert code == EXIT_INPUT

    def test_detection_summary(self):
        flags = np.array([True, True, False, False])
        labels = np.array([True, False, True, False])
        summary = detection_summary(flags, labels)
        assert summary["true_positives"] == 1
        assert summary["recall"] == 0.5
        assert summary["false_positive_rate"] == 0.5


class TestBench:

    def _config(self, tmp_path, text):
        path = tmp_path / "bench.yaml"
        path.write_text(text, encoding="utf-8")
        return path

    def test_runs_grid(self, tmp_path, capsys):
        config = self._config(
            tmp_path,
            "datasets: [A]\nkinds: [clean, point]\neps_list: [0.1]\nreplications: 2\ntau: 100\n",
        )
        out_dir = tmp_path / "out"
        assert main(["bench", str(config), "--threads", "2", "--out", str(out_dir)]) == EXIT_OK
        rows = (out_dir / "results.csv").read_text(encoding="utf-8").splitlines()
        assert len(rows) == 1 + 2 * 2 * 3
        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["any_succeeded"] is True
        assert "records" in capsys.readouterr().out

    def test_results_independent_of_workers(self, tmp_path):
        config = self._config(tmp_path, "datasets: [A]\nkinds: [radial]\neps_list: [0.1]\nreplications: 3\ntau: 50\n")
        assert main(["bench", str(config), "--threads", "1", "--out", str(tmp_path / "one")]) == EXIT_OK
        assert main(["bench", str(config), "--threads", "3", "--out", str(tmp_path / "three")]) == EXIT_OK
        assert (tmp_path / "one" / "results.csv").read_bytes() == (tmp_path / "three" / "results.csv").read_bytes()

    def test_all_skipped_exits_numeric(self, tmp_path, capsys):
        config = self._config(
            tmp_path,
            "datasets: [{name: tiny, n: 8, p: 5}]\nmethods: [fir]\nreplications: 1\ntau: 20\n",
        )
        assert main(["bench", str(config), "--out", str(tmp_path / "out")]) == EXIT_NUMERIC
        assert "every bench cell failed" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path):
        config = self._config(tmp_path, "datasets: [Z]\n")
        assert main(["bench", str(config), "--out", str(tmp_path / "out")]) == EXIT_INPUT


class TestTiming:

    def test_writes_table(self, tmp_path, capsys):
        code = main(
            [
                "timing",
                "--n",
                "100",
                "200",
                "--p",
                "4",
                "--runs",
                "1",
                "--methods",
                "fir",
                "classical",
                "--directions",
                "50",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        rows = (tmp_path / "timing.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "method,n,p,runs,mean_seconds"
        assert len(rows) == 5
        assert "fir: n=200" in capsys.readouterr().out


class TestMain:

    def test_no_command(self, capsys):
        assert main([]) == EXIT_INPUT
        assert "No command specified" in capsys.readouterr().err

    def test_structured_error_logging(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("a\nx\n", encoding="utf-8")
        assert main(["estimate", str(path), "--structured-logs"]) == EXIT_INPUT
        err = capsys.readouterr().err
        assert "ERROR: line 2, column 1" in err
        assert '"error_type": "DataFormatError"' in err

    @pytest.mark.parametrize("flag", ["--help"])
    def test_help(self, flag):
        with pytest.raises(SystemExit) as exc_info:
            main([flag])
        assert exc_info.value.code == 0


class TestOutputDocuments:

    def test_every_output_matches_its_model(self, tmp_path):
        prefix = _simulate(
            tmp_path, "data", "--kind", "cluster", "--n", "120", "--p", "4", "--eps", "0.1", "--seed", "2"
        )
        truth = TruthDocument.model_validate_json((tmp_path / "data.truth.json").read_text(encoding="utf-8"))
        assert truth.spec.kind == "cluster" and truth.n_outliers == 12

        estimate = tmp_path / "estimate.json"
        flags = ["--labels", f"{prefix}.labels.csv", "--directions", "100"]
        assert main(["estimate", f"{prefix}.csv", *flags, "--out", str(estimate)]) == EXIT_OK
        document = EstimateDocument.model_validate_json(estimate.read_text(encoding="utf-8"))
        assert document.outliers_in_h is not None
        assert document.config.n == 120

        assert main(["pca", f"{prefix}.csv", *flags, "--out", str(tmp_path / "pca")]) == EXIT_OK
        model = PcaModelDocument.model_validate_json((tmp_path / "pca" / "model.json").read_text(encoding="utf-8"))
        assert model.detection is not None
        assert model.config.max_rank is None

        config = tmp_path / "bench.yaml"
        config.write_text(
            "datasets: [{name: S, n: 60, p: 3}]\nkinds: [clean, radial]\neps_list: [0.1]\nreplications: 1\ntau: 40\n",
            encoding="utf-8",
        )
        assert main(["bench", str(config), "--threads", "1", "--out", str(tmp_path / "bench")]) == EXIT_OK
        summary = BenchSummary.model_validate_json((tmp_path / "bench" / "summary.json").read_text(encoding="utf-8"))
        assert len(summary.cells) == 2 * 3

    def test_unknown_keys_are_rejected(self, tmp_path):
        prefix = _simulate(tmp_path, "data", "--n", "60", "--p", "3")
        out = tmp_path / "estimate.json"
        assert main(["estimate", f"{prefix}.csv", "--directions", "50", "--out", str(out)]) == EXIT_OK
        document = json.loads(out.read_text(encoding="utf-8"))
        document["extra"] = 1
        with pytest.raises(ValidationError):
            EstimateDocument.model_validate(document)

    def test_schemas_command(self, tmp_path, capsys):
        assert main(["schemas", "--out", str(tmp_path / "schemas")]) == EXIT_OK
        for name, model in DOCUMENT_MODELS.items():
            written = json.loads((tmp_path / "schemas" / schema_filename(name)).read_text(encoding="utf-8"))
            assert written == model.model_json_schema()
        assert "Wrote 4 schemas" in capsys.readouterr().out
