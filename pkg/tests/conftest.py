from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plansteer import fixtures, vlm


@pytest.fixture(scope="session")
def bundled_manifest() -> str:
    return str(fixtures.manifest_path())


@pytest.fixture(scope="session")
def bundled_annotations() -> str:
    return str(fixtures.annotations_path())


@pytest.fixture(scope="session")
def bundled_script() -> vlm.MockScript:
    return vlm.load_mock_script(fixtures.mock_script_path())


@pytest.fixture(scope="session")
def mock_backend(bundled_script) -> vlm.BackendConfig:
    return vlm.BackendConfig(kind="mock", mock_script=bundled_script)
