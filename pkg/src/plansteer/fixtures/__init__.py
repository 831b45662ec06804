"""Bundled desk-scale fixtures: a 5-scene synthetic manifest, 8 passenger
annotations, a mock script, and placeholder camera frames.

Regenerate with scripts/make_bundled_fixtures.py.
"""

from __future__ import annotations

from pathlib import Path

_ROOT = Path(__file__).parent


def fixture_path(name: str) -> Path:
    return _ROOT / name


def manifest_path() -> Path:
    return fixture_path("manifest.json")


def annotations_path() -> Path:
    return fixture_path("annotations.csv")


def mock_script_path() -> Path:
    return fixture_path("mock_script.json")
