#!/usr/bin/env python3
"""Regenerate the bundled fixtures under src/plansteer/fixtures/.

Every ground-truth trajectory is written from closed-form arithmetic
(straight lines, constant-curvature circles, cumulative sums), never from
the package's own integrator, so the fixtures stay usable as oracles.
"""

from __future__ import annotations

import json
import math
import struct
import sys
import zlib
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "src" / "plansteer" / "fixtures"

DT = 0.5
HORIZON = 10


def rotate_translate(points, x0, y0, heading):
    c, s = math.cos(heading), math.sin(heading)
    return [[x0 + c * px - s * py, y0 + s * px + c * py] for px, py in points]


def straight_points(speed, n=HORIZON):
    return [(speed * DT * (k + 1), 0.0) for k in range(n)]


def arc_points(speed, kappa, n=HORIZON):
    # Constant-speed, constant-curvature motion from the origin: after the
    # k-th step the heading is theta_k and the position follows the circle
    # x = sin(theta)/kappa, y = (1 - cos(theta))/kappa.
    pts = []
    for k in range(1, n + 1):
        theta = speed * kappa * DT * k
        pts.append((math.sin(theta) / kappa, (1.0 - math.cos(theta)) / kappa))
    return pts


def decel_points(speeds):
    xs, acc = [], 0.0
    for v in speeds:
        acc += v * DT
        xs.append((acc, 0.0))
    return xs


def history(x0, y0, heading, speed, n=4):
    # Straight approach ending exactly at the start pose at t = (n-1)*DT.
    states = []
    for i in range(n):
        back = (n - 1 - i) * speed * DT
        states.append({
            "t": round(i * DT, 3),
            "x": x0 - back * math.cos(heading),
            "y": y0 - back * math.sin(heading),
            "heading": heading,
            "speed": speed,
        })
    return states


def png_bytes(width, height, rgb_top, rgb_bottom):
    """Minimal vertical-gradient PNG, no image libraries needed."""
    rows = b""
    for y in range(height):
        t = y / max(height - 1, 1)
        r = int(rgb_top[0] + (rgb_bottom[0] - rgb_top[0]) * t)
        g = int(rgb_top[1] + (rgb_bottom[1] - rgb_top[1]) * t)
        b = int(rgb_top[2] + (rgb_bottom[2] - rgb_top[2]) * t)
        rows += b"\x00" + bytes([r, g, b]) * width

    def chunk(tag, data):
        payload = tag + data
        return struct.pack(">I", len(data)) + payload + struct.pack(
            ">I", zlib.crc32(payload) & 0xFFFFFFFF
        )

    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", header)
        + chunk(b"IDAT", zlib.compress(rows))
        + chunk(b"IEND", b"")
    )


SCENES = [
    # (scene_id, start x/y/heading, speed, ground-truth builder, frame colors)
    ("scene-001", 120.0, 80.0, 0.4, 0.0,
     lambda: [(0.0, 0.0)] * HORIZON, ((90, 90, 110), (40, 40, 60))),
    ("scene-002", 200.0, -40.0, 0.3, 2.0,
     lambda: straight_points(2.0), ((120, 160, 200), (60, 90, 120))),
    ("scene-003", 50.0, 50.0, 1.2, 5.0,
     lambda: arc_points(5.0, 0.1), ((170, 140, 90), (90, 70, 40))),
    ("scene-004", 75.0, 210.0, -0.2, 4.0,
     lambda: decel_points([4, 3.5, 3, 2.5, 2, 1.5, 1, 0.5, 0.25, 0]),
     ((140, 170, 140), (60, 90, 60))),
    ("scene-005", 300.0, 120.0, -0.9, 3.0,
     lambda: arc_points(3.0, -0.05), ((180, 120, 120), (90, 50, 50))),
]

ANNOTATIONS = [
    # scene_id, annotation_id, annotator_id, text, refs_static, refs_dynamic
    ("scene-001", "a-001", "ann-1",
     "Stop at the curb on the right side of the road right before the crosswalk.",
     True, False),
    ("scene-002", "a-002", "ann-2", "Go straight when the stoplight turns green",
     True, False),
    ("scene-002", "a-003", "ann-3", "Follow the yellow car", False, True),
    ("scene-003", "a-004", "ann-1", "Turn left", False, False),
    ("scene-003", "a-005", "ann-4",
     "Turn left at the intersection right after the crosswalk ahead", True, False),
    ("scene-004", "a-006", "ann-2", "Slow down for the pedestrians", False, True),
    ("scene-004", "a-007", "ann-5",
     "Slow down and stay behind the crossing group of pedestrians until they reach the far sidewalk",
     False, True),
    ("scene-005", "a-008", "ann-6",
     "Keep to the right lane and merge onto the highway ramp after you pass the large blue directional sign overhead",
     True, False),
]

ZEROS = ", ".join(["0"] * HORIZON)

MOCK_RULES = [
    {"match": {"stage": "trajectory_request", "instruction_contains": "Stop"},
     "response_text": f"Speeds: [{ZEROS}]\nCurvatures: [{ZEROS}]"},
    {"match": {"stage": "trajectory_request", "instruction_contains": "straight"},
     "response_text": f"Speeds: [{', '.join(['2'] * HORIZON)}]\nCurvatures: [{ZEROS}]"},
    {"match": {"stage": "trajectory_request", "instruction_contains": "Follow the yellow"},
     "response_text": f"Speeds: [{', '.join(['2'] * HORIZON)}]\nCurvatures: [{ZEROS}]"},
    {"match": {"stage": "trajectory_request", "instruction_contains": "Turn left"},
     "response_text": f"Speeds: [{', '.join(['5'] * HORIZON)}]\n"
                      f"Curvatures: [{', '.join(['0.1'] * HORIZON)}]"},
    {"match": {"stage": "trajectory_request", "instruction_contains": "Slow down"},
     "response_text": "Speeds: [4, 3.5, 3, 2.5, 2, 1.5, 1, 0.5, 0.25, 0]\n"
                      f"Curvatures: [{ZEROS}]"},
]


def main() -> int:
    frames_dir = FIXTURES / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    scenes = []
    for scene_id, x0, y0, heading, speed, gt_builder, colors in SCENES:
        frames = []
        for i in range(4):
            name = f"{scene_id}_{i:02d}.png"
            shade = tuple(min(255, c + i * 8) for c in colors[0])
            (frames_dir / name).write_bytes(png_bytes(64, 36, shade, colors[1]))
            frames.append({"path": f"frames/{name}", "t": round(i * DT, 3)})
        gt = rotate_translate(gt_builder(), x0, y0, heading)
        scenes.append({
            "scene_id": scene_id,
            "frames": frames,
            "ego_history": history(x0, y0, heading, speed),
            "ground_truth": gt,
        })

    manifest = {"version": 1, "dt_seconds": DT, "horizon": HORIZON, "scenes": scenes}
    (FIXTURES / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    lines = ["scene_id,annotation_id,annotator_id,text,refs_static,refs_dynamic,actionable"]
    for scene_id, ann_id, annotator, text, refs_static, refs_dynamic in ANNOTATIONS:
        lines.append(
            f'"{scene_id}","{ann_id}","{annotator}","{text}",'
            f'{str(refs_static).lower()},{str(refs_dynamic).lower()},true'
        )
    (FIXTURES / "annotations.csv").write_text("\n".join(lines) + "\n")

    (FIXTURES / "mock_script.json").write_text(json.dumps(MOCK_RULES, indent=2) + "\n")

    print(f"wrote fixtures to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
