from __future__ import annotations

from .exporters import ExportManager

__all__ = [
    "ExportManager",
]
