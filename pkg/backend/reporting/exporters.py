from __future__ import annotations

import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from ..core.fir import FirResult
from ..core.robust_pca import RobustPcaModel
from ..core.simdata import LabeledData, SimSpec
from ..utils.logging_config import get_logger
from .documents import Detection, EstimateConfig, EstimateDocument, PcaConfig, PcaModelDocument, TruthDocument

logger = get_logger("exporters")

FLOAT_FORMAT = ".17g"

_SVG_WIDTH = 640
_SVG_HEIGHT = 480
_SVG_MARGIN = 60


def format_float(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def matrix_to_lists(matrix: Any) -> list:
    return np.asarray(matrix, dtype=np.float64).tolist()


class ExportManager:

    @staticmethod
    def export_matrix_csv(
        matrix: Any,
        output_path: Path | str,
        header: Optional[Sequence[str]] = None,
        prefix: str = "x",
    ) -> None:
        output_path = Path(output_path)
        values = np.asarray(matrix, dtype=np.float64)
        if values.ndim != 2:
            values = values.reshape(values.shape[0], -1)
        names = list(header) if header is not None else [f"{prefix}{j + 1}" for j in range(values.shape[1])]

        with open(output_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(names)
            for row in values:
                writer.writerow([format_float(v) for v in row])

        logger.info("Exported %d x %d matrix to CSV: %s", values.shape[0], values.shape[1], output_path)

    @staticmethod
    def export_labels_csv(labels: Any, output_path: Path | str) -> None:
        output_path = Path(output_path)
        with open(output_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["is_outlier"])
            for flag in np.asarray(labels, dtype=bool):
                writer.writerow([1 if flag else 0])

    @staticmethod
    def export_rows_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], output_path: Path | str) -> None:
        output_path = Path(output_path)
        with open(output_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])

    @staticmethod
    def export_json(payload: Dict[str, Any], output_path: Path | str) -> None:
        output_path = Path(output_path)
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, ensure_ascii=False)
            f.write("\n")
        logger.info("Exported JSON: %s", output_path)

    @staticmethod
    def export_outlier_map_csv(model: RobustPcaModel, output_path: Path | str) -> None:
        rows = (
            (i, float(sd), float(od), int(flag))
            for i, (sd, od, flag) in enumerate(zip(model.sd, model.od, model.outlier_flags))
        )
        ExportManager.export_rows_csv(["index", "sd", "od", "flag"], rows, output_path)

    @staticmethod
    def export_outlier_map_svg(model: RobustPcaModel, output_path: Path | str, title: str = "") -> None:
        """Static scatter of score distance against orthogonal distance."""
        output_path = Path(output_path)
        plot_w = _SVG_WIDTH - 2 * _SVG_MARGIN
        plot_h = _SVG_HEIGHT - 2 * _SVG_MARGIN
        x_max = 1.05 * max(float(np.max(model.sd)), model.cutoff_sd, 1e-12)
        y_max = 1.05 * max(float(np.max(model.od)), model.cutoff_od, 1e-12)

        def px(value: float) -> str:
            return f"{_SVG_MARGIN + plot_w * value / x_max:.2f}"

        def py(value: float) -> str:
            return f"{_SVG_HEIGHT - _SVG_MARGIN - plot_h * value / y_max:.2f}"

        root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            width=str(_SVG_WIDTH),
            height=str(_SVG_HEIGHT),
            viewBox=f"0 0 {_SVG_WIDTH} {_SVG_HEIGHT}",
        )
        ET.SubElement(root, "rect", x="0", y="0", width=str(_SVG_WIDTH), height=str(_SVG_HEIGHT), fill="white")
        if title:
            ET.SubElement(root, "text", x=str(_SVG_WIDTH // 2), y="24", attrib={"text-anchor": "middle"}).text = title

        axes = ET.SubElement(root, "g", stroke="black", attrib={"stroke-width": "1"})
        ET.SubElement(axes, "line", x1=px(0.0), y1=py(0.0), x2=px(x_max), y2=py(0.0))
        ET.SubElement(axes, "line", x1=px(0.0), y1=py(0.0), x2=px(0.0), y2=py(y_max))

        cutoffs = ET.SubElement(root, "g", stroke="red", attrib={"stroke-dasharray": "6 4"})
        ET.SubElement(cutoffs, "line", x1=px(model.cutoff_sd), y1=py(0.0), x2=px(model.cutoff_sd), y2=py(y_max))
        ET.SubElement(cutoffs, "line", x1=px(0.0), y1=py(model.cutoff_od), x2=px(x_max), y2=py(model.cutoff_od))

        points = ET.SubElement(root, "g")
        for sd, od, flag in zip(model.sd, model.od, model.outlier_flags):
            ET.SubElement(
                points,
                "circle",
                cx=px(float(sd)),
                cy=py(float(od)),
                r="3",
                fill="firebrick" if flag else "steelblue",
            )

        ET.SubElement(
            root, "text", x=str(_SVG_WIDTH // 2), y=str(_SVG_HEIGHT - 20), attrib={"text-anchor": "middle"}
        ).text = "Score distance"
        ET.SubElement(
            root,
            "text",
            x="18",
            y=str(_SVG_HEIGHT // 2),
            transform=f"rotate(-90 18 {_SVG_HEIGHT // 2})",
            attrib={"text-anchor": "middle"},
        ).text = "Orthogonal distance"

        ET.ElementTree(root).write(output_path, encoding="utf-8", xml_declaration=True)
        logger.info("Exported outlier map SVG: %s", output_path)


def estimate_document(
    result: FirResult,
    runtime_ms: float,
    config: Dict[str, Any],
    outliers_in_h: Optional[int] = None,
) -> Dict[str, Any]:
    document = EstimateDocument(
        mu=result.mu.tolist(),
        sigma=matrix_to_lists(result.sigma),
        h_indices=[int(i) for i in result.h_indices],
        runtime_ms=float(runtime_ms),
        config=EstimateConfig.model_validate(config),
        outliers_in_h=outliers_in_h,
    )
    return document.to_payload()


def pca_model_document(
    model: RobustPcaModel,
    config: Dict[str, Any],
    detection: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    document = PcaModelDocument(
        method=model.method.value,
        loadings=matrix_to_lists(model.loadings),
        variances=model.variances.tolist(),
        center=model.center.tolist(),
        r0=model.r0,
        r1=model.r1,
        cutoff_sd=float(model.cutoff_sd),
        cutoff_od=float(model.cutoff_od),
        n_flagged=int(np.count_nonzero(model.outlier_flags)),
        h_indices=[int(i) for i in model.h_indices],
        config=PcaConfig.model_validate(config),
        detection=Detection.model_validate(detection) if detection is not None else None,
    )
    return document.to_payload()


def truth_document(spec: SimSpec, data: LabeledData) -> Dict[str, Any]:
    document = TruthDocument(
        spec=spec,
        n_outliers=data.n_outliers,
        true_mu=data.true_mu.tolist(),
        true_sigma=matrix_to_lists(data.true_sigma),
        mixing=matrix_to_lists(data.mixing),
    )
    return document.to_payload()
