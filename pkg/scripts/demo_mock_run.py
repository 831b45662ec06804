#!/usr/bin/env python3
"""Run the bundled 5-scene fixture through both conditions on the mock
backend, then render the report tables. Writes under ./demo_out/."""

from __future__ import annotations

import sys
from pathlib import Path

from plansteer import fixtures
from plansteer.cli import main

OUT = Path("demo_out")


def run() -> int:
    OUT.mkdir(exist_ok=True)
    results = OUT / "results.jsonl"
    code = main([
        "run",
        "--manifest", str(fixtures.manifest_path()),
        "--annotations", str(fixtures.annotations_path()),
        "--backend", "mock",
        "--mock-script", str(fixtures.mock_script_path()),
        "--out", str(results),
        "--seed", "7",
    ])
    if code != 0:
        return code
    code = main([
        "report",
        "--results", str(results),
        "--q", "0.975",
        "--out-dir", str(OUT / "reports"),
        "--manifest", str(fixtures.manifest_path()),
    ])
    if code != 0:
        return code
    print()
    print((OUT / "reports" / "table1.txt").read_text())
    print(f"full report in {OUT / 'reports'}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
