import logging
import sys
from pathlib import Path

import pytest

project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from backend.utils.config import set_config  # noqa: E402

_ENV_VARS = (
    "FIR_THREADS",
    "FIR_REPLICATIONS",
    "FIR_DIRECTIONS",
    "FIR_ALPHA",
    "FIR_LOG_LEVEL",
    "FIR_LOG_FILE",
    "FIR_STRUCTURED_LOGS",
)


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch):
    for name in _ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    set_config(None)
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    set_config(None)
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        if handler not in root.handlers:
            root.addHandler(handler)
    root.setLevel(level)
