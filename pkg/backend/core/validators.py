from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .exceptions import InvalidArgumentError


class MatrixValidator:

    @classmethod
    def validate(
        cls,
        values: Any,
        name: str = "data",
        min_rows: int = 1,
        min_cols: int = 1,
    ) -> NDArray[np.float64]:
        try:
            matrix = np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"{name} is not numeric: {exc}") from exc

        if matrix.ndim != 2:
            raise InvalidArgumentError(
                f"{name} must be a 2-D matrix",
                details={"ndim": int(matrix.ndim)},
            )

        n, p = matrix.shape
        if n < min_rows or p < min_cols:
            raise InvalidArgumentError(
                f"{name} needs at least {min_rows} row(s) and {min_cols} column(s)",
                details={"rows": int(n), "cols": int(p)},
            )

        if not np.all(np.isfinite(matrix)):
            bad = np.argwhere(~np.isfinite(matrix))[0]
            raise InvalidArgumentError(
                f"{name} contains non-finite entries",
                details={"row": int(bad[0]), "col": int(bad[1])},
            )

        return matrix

    @classmethod
    def validate_columns(cls, matrix: NDArray[np.float64], expected: int, name: str = "data") -> None:
        if matrix.shape[1] != expected:
            raise InvalidArgumentError(
                f"{name} has {matrix.shape[1]} columns, expected {expected}",
                details={"cols": int(matrix.shape[1]), "expected": int(expected)},
            )

    @classmethod
    def validate_vector(cls, values: Any, name: str = "values") -> NDArray[np.float64]:
        vector = np.asarray(values, dtype=np.float64).ravel()
        if vector.size == 0:
            raise InvalidArgumentError(f"{name} must be non-empty")
        if not np.all(np.isfinite(vector)):
            raise InvalidArgumentError(f"{name} contains non-finite entries")
        return vector


class ProbabilityValidator:

    @classmethod
    def validate_open(cls, prob: float, name: str = "prob") -> float:
        prob = float(prob)
        if not 0.0 < prob < 1.0:
            raise InvalidArgumentError(
                f"{name} must lie in the open interval (0, 1)",
                details={name: prob},
            )
        return prob


class PathValidator:

    @classmethod
    def validate_output_path(cls, path: str | Path, suffixes: tuple[str, ...] = ()) -> Path:
        if not str(path).strip():
            raise InvalidArgumentError("Output path must be a non-empty string")

        resolved = Path(path)
        if suffixes and resolved.suffix.lower() not in suffixes:
            raise InvalidArgumentError(
                f"Output file must have one of these extensions: {suffixes}",
                details={"path": str(resolved)},
            )

        if resolved.exists() and resolved.is_dir():
            raise InvalidArgumentError(
                "Output path points to a directory",
                details={"path": str(resolved)},
            )

        return resolved
