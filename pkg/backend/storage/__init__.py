from __future__ import annotations

from .datasets import read_labels, read_matrix

__all__ = [
    "read_labels",
    "read_matrix",
]
