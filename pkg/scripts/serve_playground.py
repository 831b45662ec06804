#!/usr/bin/env python3
"""Serve the bundled fixtures with the mock backend for the playground UI.

    python scripts/serve_playground.py [--port 8777]

Then open frontend/dist/index.html (after `npm run build` in frontend/),
or point the dev playground at http://127.0.0.1:8777.
"""

from __future__ import annotations

import argparse
import sys

from plansteer import fixtures
from plansteer.cli import main


def run() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--port", type=int, default=8777)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args()
    return main([
        "serve",
        "--manifest", str(fixtures.manifest_path()),
        "--annotations", str(fixtures.annotations_path()),
        "--backend", "mock",
        "--mock-script", str(fixtures.mock_script_path()),
        "--host", args.host,
        "--port", str(args.port),
    ])


if __name__ == "__main__":
    sys.exit(run())
