"""CSV ingestion for numeric data matrices and outlier label files.

Files are comma-separated UTF-8 with a header row. Diagnostics carry 1-based
line and column numbers.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import List, Tuple

import numpy as np
from numpy.typing import NDArray

from ..core.exceptions import DataFormatError
from ..utils.logging_config import get_logger

logger = get_logger("datasets")

LABEL_HEADER = "is_outlier"


def _open_rows(path: Path | str) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path} is empty", line=1) from None
        except csv.Error as exc:
            raise DataFormatError(f"{path}: {exc}", line=reader.line_num) from exc

        rows: List[Tuple[int, List[str]]] = []
        try:
            for row in reader:
                if not row or all(not cell.strip() for cell in row):
                    continue
                rows.append((reader.line_num, row))
        except csv.Error as exc:
            raise DataFormatError(f"{path}: {exc}", line=reader.line_num) from exc

    return [name.strip() for name in header], rows


def _parse_cell(cell: str, line: int, column: int) -> float:
    try:
        value = float(cell.strip())
    except ValueError:
        raise DataFormatError(
            f"line {line}, column {column}: not a number: {cell!r}",
            line=line,
            column=column,
        ) from None
    if not math.isfinite(value):
        raise DataFormatError(
            f"line {line}, column {column}: non-finite value {cell!r}",
            line=line,
            column=column,
        )
    return value


def read_matrix(path: Path | str) -> Tuple[NDArray[np.float64], List[str]]:
    header, rows = _open_rows(path)
    width = len(header)
    if width == 0 or any(not name for name in header):
        raise DataFormatError(f"{path}: header has empty column names", line=1)
    if not rows:
        raise DataFormatError(f"{path}: no data rows", line=2)

    values = np.empty((len(rows), width), dtype=np.float64)
    for i, (line, row) in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(
                f"line {line}: expected {width} fields, found {len(row)}",
                line=line,
                column=min(len(row), width) + 1,
            )
        for j, cell in enumerate(row):
            values[i, j] = _parse_cell(cell, line, j + 1)

    logger.debug("Read %d x %d matrix from %s", values.shape[0], values.shape[1], path)
    return values, header


def read_labels(path: Path | str, expected_rows: int | None = None) -> NDArray[np.bool_]:
    header, rows = _open_rows(path)
    if header != [LABEL_HEADER]:
        raise DataFormatError(
            f"{path}: label file must have the single header '{LABEL_HEADER}'",
            line=1,
            column=1,
        )

    labels = np.zeros(len(rows), dtype=bool)
    for i, (line, row) in enumerate(rows):
        cell = row[0].strip() if len(row) == 1 else None
        if cell not in ("0", "1"):
            raise DataFormatError(
                f"line {line}: label must be 0 or 1",
                line=line,
                column=1 if len(row) <= 1 else 2,
            )
        labels[i] = cell == "1"

    if expected_rows is not None and labels.size != expected_rows:
        raise DataFormatError(
            f"{path}: {labels.size} labels for {expected_rows} data rows",
            line=len(rows) + 1,
        )
    return labels
