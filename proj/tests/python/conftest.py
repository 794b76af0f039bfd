import os
import shutil
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("VISTA_CLI") or shutil.which("vista")
    if not path:
        candidate = Path(__file__).resolve().parents[2] / "build" / "tools" / "vista"
        path = str(candidate) if candidate.exists() else None
    if not path:
        pytest.skip("vista executable not found")
    return path
