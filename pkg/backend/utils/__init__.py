from __future__ import annotations

from .config import Config, get_config, set_config
from .logging_config import get_logger, setup_logging

__all__ = [
    "Config",
    "get_config",
    "get_logger",
    "set_config",
    "setup_logging",
]
