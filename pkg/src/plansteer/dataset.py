"""Scene manifests and passenger-instruction annotations.

The single source of truth for what gets evaluated. Scenes arrive as one
JSON manifest (header + scene array); annotations as CSV or a JSON array.
Records are frozen after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

DEFAULT_DT = 0.5  # seconds between annotated samples (2 Hz source data)
DEFAULT_HORIZON = 10
MANIFEST_VERSION = 1


class DatasetError(Exception):
    """Manifest or annotation file violates the documented format."""


@dataclass(frozen=True)
class EgoState:
    t: float
    x: float
    y: float
    heading: float
    speed: float

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise DatasetError(f"ego speed must be >= 0, got {self.speed}")
        if not -math.pi < self.heading <= math.pi:
            h = math.fmod(self.heading + math.pi, 2.0 * math.pi)
            if h <= 0.0:
                h += 2.0 * math.pi
            object.__setattr__(self, "heading", h - math.pi)


@dataclass(frozen=True)
class FrameRef:
    path: str
    t: float


@dataclass(frozen=True)
class Bounds:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y

    def expand(self, margin: float) -> "Bounds":
        return Bounds(
            self.min_x - margin, self.min_y - margin,
            self.max_x + margin, self.max_y + margin,
        )

    def to_dict(self) -> dict:
        return {
            "min_x": self.min_x, "min_y": self.min_y,
            "max_x": self.max_x, "max_y": self.max_y,
        }


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    frames: tuple[FrameRef, ...]
    ego_history: tuple[EgoState, ...]
    ground_truth: tuple[tuple[float, float], ...]
    bounds: Bounds


@dataclass(frozen=True)
class InstructionAnnotation:
    scene_id: str
    annotation_id: str
    annotator_id: str
    text: str
    refs_static: bool = False
    refs_dynamic: bool = False
    actionable: bool | None = None  # None = derive from text at load time

    def __post_init__(self) -> None:
        if self.actionable is None:
            object.__setattr__(self, "actionable", bool(self.text.strip()))
        if self.actionable and not self.text.strip():
            raise DatasetError(
                f"annotation {self.annotation_id}: actionable requires non-empty text"
            )


@dataclass(frozen=True)
class Manifest:
    version: int
    dt_seconds: float
    horizon: int
    scenes: tuple[SceneRecord, ...]


def _compute_bounds(scene_id: str, gt, history) -> Bounds:
    xs = [p[0] for p in gt] + [s.x for s in history]
    ys = [p[1] for p in gt] + [s.y for s in history]
    if not xs:
        raise DatasetError(f"scene {scene_id}: cannot compute bounds with no positions")
    return Bounds(min(xs), min(ys), max(xs), max(ys))


def _check_strictly_increasing(scene_id: str, field: str, ts: list[float]) -> None:
    for a, b in zip(ts, ts[1:]):
        if b <= a:
            raise DatasetError(
                f"scene {scene_id}: {field} timestamps not strictly increasing ({a} -> {b})"
            )


def _parse_scene(raw: dict, horizon: int, base_dir: Path | None = None) -> SceneRecord:
    scene_id = raw.get("scene_id")
    if not scene_id:
        raise DatasetError("scene missing scene_id")

    def need(field: str):
        if field not in raw:
            raise DatasetError(f"scene {scene_id}: missing field {field}")
        return raw[field]

    def resolve(p: str) -> str:
        # Relative frame paths are taken relative to the manifest location.
        if base_dir is not None and not Path(p).is_absolute():
            return str(base_dir / p)
        return p

    try:
        frames = tuple(FrameRef(path=resolve(f["path"]), t=float(f["t"])) for f in need("frames"))
        history = tuple(
            EgoState(
                t=float(s["t"]), x=float(s["x"]), y=float(s["y"]),
                heading=float(s["heading"]), speed=float(s["speed"]),
            )
            for s in need("ego_history")
        )
        gt = tuple((float(p[0]), float(p[1])) for p in need("ground_truth"))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DatasetError(f"scene {scene_id}: malformed field ({exc})") from exc

    if len(gt) != horizon:
        raise DatasetError(
            f"scene {scene_id}: ground_truth has {len(gt)} points, expected horizon {horizon}"
        )
    if not history:
        raise DatasetError(f"scene {scene_id}: ego_history is empty")
    _check_strictly_increasing(scene_id, "frames", [f.t for f in frames])
    _check_strictly_increasing(scene_id, "ego_history", [s.t for s in history])

    if raw.get("bounds") is not None:
        b = raw["bounds"]
        try:
            bounds = Bounds(
                float(b["min_x"]), float(b["min_y"]), float(b["max_x"]), float(b["max_y"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"scene {scene_id}: malformed field bounds ({exc})") from exc
        for x, y in list(gt) + [(s.x, s.y) for s in history]:
            if not bounds.contains(x, y):
                raise DatasetError(
                    f"scene {scene_id}: bounds do not contain position ({x}, {y})"
                )
    else:
        bounds = _compute_bounds(scene_id, gt, history)

    return SceneRecord(
        scene_id=scene_id, frames=frames, ego_history=history,
        ground_truth=gt, bounds=bounds,
    )


def load_manifest(manifest_path: str | Path) -> Manifest:
    path = Path(manifest_path)
    if not path.exists():
        raise DatasetError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "scenes" not in doc:
        raise DatasetError(f"manifest {path} missing scenes array")
    version = int(doc.get("version", MANIFEST_VERSION))
    dt = float(doc.get("dt_seconds", DEFAULT_DT))
    horizon = int(doc.get("horizon", DEFAULT_HORIZON))
    if dt <= 0:
        raise DatasetError(f"manifest {path}: dt_seconds must be positive")
    if horizon < 1:
        raise DatasetError(f"manifest {path}: horizon must be >= 1")
    scenes = tuple(_parse_scene(raw, horizon, base_dir=path.parent) for raw in doc["scenes"])
    seen: set[str] = set()
    for scene in scenes:
        if scene.scene_id in seen:
            raise DatasetError(f"duplicate scene_id {scene.scene_id}")
        seen.add(scene.scene_id)
    return Manifest(version=version, dt_seconds=dt, horizon=horizon, scenes=scenes)


def load_scenes(manifest_path: str | Path) -> list[SceneRecord]:
    return list(load_manifest(manifest_path).scenes)


def manifest_to_dict(manifest: Manifest) -> dict:
    return {
        "version": manifest.version,
        "dt_seconds": manifest.dt_seconds,
        "horizon": manifest.horizon,
        "scenes": [
            {
                "scene_id": s.scene_id,
                "frames": [{"path": f.path, "t": f.t} for f in s.frames],
                "ego_history": [
                    {"t": e.t, "x": e.x, "y": e.y, "heading": e.heading, "speed": e.speed}
                    for e in s.ego_history
                ],
                "ground_truth": [[x, y] for x, y in s.ground_truth],
                "bounds": s.bounds.to_dict(),
            }
            for s in manifest.scenes
        ],
    }


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2), encoding="utf-8")


_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f"}


def _parse_flag(value, row_num: int, field: str) -> bool | None:
    # Empty cell means "column absent for this row": fall back to the default.
    if value is None or (isinstance(value, str) and not value.strip()):
        return None
    if isinstance(value, bool):
        return value
    token = str(value).strip().lower()
    if token in _TRUE:
        return True
    if token in _FALSE:
        return False
    raise DatasetError(f"annotation row {row_num}: bad boolean for {field}: {value!r}")


def _annotation_from_fields(raw: dict, row_num: int) -> InstructionAnnotation:
    for field in ("scene_id", "annotation_id", "annotator_id", "text"):
        if raw.get(field) is None:
            raise DatasetError(f"annotation row {row_num}: missing field {field}")
    refs_static = _parse_flag(raw.get("refs_static"), row_num, "refs_static")
    refs_dynamic = _parse_flag(raw.get("refs_dynamic"), row_num, "refs_dynamic")
    actionable = _parse_flag(raw.get("actionable"), row_num, "actionable")
    return InstructionAnnotation(
        scene_id=str(raw["scene_id"]),
        annotation_id=str(raw["annotation_id"]),
        annotator_id=str(raw["annotator_id"]),
        text=str(raw["text"]),
        refs_static=bool(refs_static) if refs_static is not None else False,
        refs_dynamic=bool(refs_dynamic) if refs_dynamic is not None else False,
        actionable=actionable,
    )


def load_annotations(path: str | Path) -> list[InstructionAnnotation]:
    """Load annotations from CSV (header row required) or a JSON array."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"annotation file not found: {path}")
    text = path.read_text(encoding="utf-8")
    annotations: list[InstructionAnnotation] = []
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"annotation file {path} is not valid JSON: {exc}") from exc
        if not isinstance(rows, list):
            raise DatasetError(f"annotation file {path}: expected a JSON array")
        for i, raw in enumerate(rows, start=1):
            if not isinstance(raw, dict):
                raise DatasetError(f"annotation row {i}: expected an object")
            annotations.append(_annotation_from_fields(raw, i))
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or "scene_id" not in reader.fieldnames:
            raise DatasetError(f"annotation file {path}: missing CSV header with scene_id")
        for i, raw in enumerate(reader, start=2):  # header is line 1
            # DictReader marks short rows with None values and long rows
            # under a None key; both are malformed.
            if None in raw or any(v is None for v in raw.values()):
                raise DatasetError(f"annotation row {i}: wrong number of columns")
            annotations.append(_annotation_from_fields(raw, i))

    seen: set[str] = set()
    for ann in annotations:
        if ann.annotation_id in seen:
            raise DatasetError(f"duplicate annotation_id {ann.annotation_id}")
        seen.add(ann.annotation_id)
    return annotations


def save_annotations(annotations: list[InstructionAnnotation], path: str | Path) -> None:
    path = Path(path)
    fields = ["scene_id", "annotation_id", "annotator_id", "text",
              "refs_static", "refs_dynamic", "actionable"]
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields, quoting=csv.QUOTE_ALL)
        writer.writeheader()
        for ann in annotations:
            writer.writerow({
                "scene_id": ann.scene_id,
                "annotation_id": ann.annotation_id,
                "annotator_id": ann.annotator_id,
                "text": ann.text,
                "refs_static": str(ann.refs_static).lower(),
                "refs_dynamic": str(ann.refs_dynamic).lower(),
                "actionable": str(ann.actionable).lower(),
            })


def filter_actionable(annotations: list[InstructionAnnotation]) -> list[InstructionAnnotation]:
    """Keep only annotations that can change the motion plan, order preserved."""
    return [a for a in annotations if a.actionable]


def join_scene_annotations(
    scenes: list[SceneRecord], annotations: list[InstructionAnnotation]
) -> tuple[list[tuple[SceneRecord, list[InstructionAnnotation]]], list[InstructionAnnotation]]:
    """Pair each scene with its annotations; unknown scene_ids go to rejects."""
    by_scene: dict[str, list[InstructionAnnotation]] = {s.scene_id: [] for s in scenes}
    rejects: list[InstructionAnnotation] = []
    for ann in annotations:
        if ann.scene_id in by_scene:
            by_scene[ann.scene_id].append(ann)
        else:
            rejects.append(ann)
    return [(s, by_scene[s.scene_id]) for s in scenes], rejects
