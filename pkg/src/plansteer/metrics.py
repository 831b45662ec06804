"""Scoring and aggregation: ADE, out-of-bounds detection, outlier
filtering, and the instruction groupings used by the report tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .dataset import Bounds
from .kinematics import Trajectory

DEFAULT_OOB_MARGIN = 30.0  # meters beyond the data bounding box


class MetricsError(Exception):
    pass


class ReferentialityCategory(Enum):
    NONE = "none"
    STATIC_ONLY = "static_only"
    DYNAMIC_ONLY = "dynamic_only"
    STATIC_DYNAMIC = "static_dynamic"

    @property
    def label(self) -> str:
        return _REFERENTIALITY_LABELS[self]


_REFERENTIALITY_LABELS = {
    ReferentialityCategory.NONE: "None (Non-ref)",
    ReferentialityCategory.STATIC_ONLY: "Static Only",
    ReferentialityCategory.DYNAMIC_ONLY: "Dynamic Only",
    ReferentialityCategory.STATIC_DYNAMIC: "Static + Dynamic",
}


class LengthBucket(Enum):
    ULTRA_SHORT = "ultra_short"
    SHORT = "short"
    TYPICAL = "typical"
    DESCRIPTIVE = "descriptive"
    LONG = "long"

    @property
    def label(self) -> str:
        return _BUCKET_LABELS[self][0]

    @property
    def word_range(self) -> str:
        return _BUCKET_LABELS[self][1]


_BUCKET_LABELS = {
    LengthBucket.ULTRA_SHORT: ("Ultra-Short", "0-4"),
    LengthBucket.SHORT: ("Short", "5-8"),
    LengthBucket.TYPICAL: ("Typical", "9-12"),
    LengthBucket.DESCRIPTIVE: ("Descriptive", "13-18"),
    LengthBucket.LONG: ("Long", "19+"),
}

BUCKET_ORDER = (
    LengthBucket.ULTRA_SHORT,
    LengthBucket.SHORT,
    LengthBucket.TYPICAL,
    LengthBucket.DESCRIPTIVE,
    LengthBucket.LONG,
)

REFERENTIALITY_ORDER = (
    ReferentialityCategory.NONE,
    ReferentialityCategory.STATIC_ONLY,
    ReferentialityCategory.DYNAMIC_ONLY,
    ReferentialityCategory.STATIC_DYNAMIC,
)


def word_count(text: str) -> int:
    """Number of maximal whitespace-separated tokens."""
    return len(text.split())


def bucket_for_count(n: int) -> LengthBucket:
    if n <= 4:
        return LengthBucket.ULTRA_SHORT
    if n <= 8:
        return LengthBucket.SHORT
    if n <= 12:
        return LengthBucket.TYPICAL
    if n <= 18:
        return LengthBucket.DESCRIPTIVE
    return LengthBucket.LONG


def length_bucket(text: str) -> LengthBucket:
    return bucket_for_count(word_count(text))


def referentiality_category(refs_static: bool, refs_dynamic: bool) -> ReferentialityCategory:
    if refs_static and refs_dynamic:
        return ReferentialityCategory.STATIC_DYNAMIC
    if refs_static:
        return ReferentialityCategory.STATIC_ONLY
    if refs_dynamic:
        return ReferentialityCategory.DYNAMIC_ONLY
    return ReferentialityCategory.NONE


def _points(traj) -> list[tuple[float, float]]:
    if isinstance(traj, Trajectory):
        return list(traj.points)
    return [(float(p[0]), float(p[1])) for p in traj]


def ade(pred, gt) -> float:
    """Mean Euclidean distance between paired positions."""
    pred_pts = _points(pred)
    gt_pts = _points(gt)
    if len(pred_pts) != len(gt_pts):
        raise MetricsError(
            f"trajectory length mismatch: {len(pred_pts)} vs {len(gt_pts)}"
        )
    if not pred_pts:
        raise MetricsError("cannot compute ADE on empty trajectories")
    total = 0.0
    for (px, py), (gx, gy) in zip(pred_pts, gt_pts):
        total += math.hypot(px - gx, py - gy)
    return total / len(pred_pts)


def out_of_bounds(pred, bounds: Bounds, margin: float = DEFAULT_OOB_MARGIN) -> bool:
    """True iff any predicted point escapes the margin-expanded bounds.

    The expanded region is closed: a point exactly on the edge is inside.
    """
    if margin < 0:
        raise MetricsError("margin must be >= 0")
    expanded = bounds.expand(margin)
    return any(not expanded.contains(x, y) for x, y in _points(pred))


@dataclass(frozen=True)
class EvaluationRecord:
    """One (scene, condition, instruction?) pipeline run."""

    scene_id: str
    condition: str  # "baseline" | "instructed"
    annotation_id: str | None = None
    instruction_text: str | None = None
    ade: float | None = None
    out_of_bounds: bool = False
    parse_tier: int | None = None  # None = the run failed before scoring
    failure: str | None = None
    word_count: int | None = None
    referentiality: str | None = None
    clamp_count: int = 0
    speeds: tuple[float, ...] | None = None
    curvatures: tuple[float, ...] | None = None
    waypoints: tuple[tuple[float, float], ...] | None = None
    stage_texts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.condition not in ("baseline", "instructed"):
            raise MetricsError(f"unknown condition {self.condition!r}")
        if self.condition == "instructed":
            if not self.annotation_id or self.instruction_text is None:
                raise MetricsError("instructed record requires annotation_id and instruction_text")
        else:
            if self.annotation_id is not None or self.instruction_text is not None:
                raise MetricsError("baseline record must not carry instruction fields")
        if (self.ade is None) != (self.parse_tier is None):
            raise MetricsError("ade must be present exactly when the parse succeeded")

    @property
    def key(self) -> tuple[str, str, str | None]:
        return (self.scene_id, self.condition, self.annotation_id)

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "condition": self.condition,
            "annotation_id": self.annotation_id,
            "instruction_text": self.instruction_text,
            "ade": self.ade,
            "out_of_bounds": self.out_of_bounds,
            "parse_tier": self.parse_tier,
            "failure": self.failure,
            "word_count": self.word_count,
            "referentiality": self.referentiality,
            "clamp_count": self.clamp_count,
            "speeds": list(self.speeds) if self.speeds is not None else None,
            "curvatures": list(self.curvatures) if self.curvatures is not None else None,
            "waypoints": [list(p) for p in self.waypoints] if self.waypoints is not None else None,
            "stage_texts": dict(self.stage_texts),
            "meta": dict(self.meta),
        }

    @staticmethod
    def from_dict(raw: dict) -> "EvaluationRecord":
        return EvaluationRecord(
            scene_id=raw["scene_id"],
            condition=raw["condition"],
            annotation_id=raw.get("annotation_id"),
            instruction_text=raw.get("instruction_text"),
            ade=raw.get("ade"),
            out_of_bounds=bool(raw.get("out_of_bounds", False)),
            parse_tier=raw.get("parse_tier"),
            failure=raw.get("failure"),
            word_count=raw.get("word_count"),
            referentiality=raw.get("referentiality"),
            clamp_count=int(raw.get("clamp_count", 0)),
            speeds=tuple(raw["speeds"]) if raw.get("speeds") is not None else None,
            curvatures=tuple(raw["curvatures"]) if raw.get("curvatures") is not None else None,
            waypoints=tuple(tuple(p) for p in raw["waypoints"])
            if raw.get("waypoints") is not None else None,
            stage_texts=raw.get("stage_texts", {}),
            meta=raw.get("meta", {}),
        )


@dataclass(frozen=True)
class SceneAggregate:
    scene_id: str
    baseline_ade: float | None
    best_ade: float | None
    avg_ade: float | None
    worst_ade: float | None
    n_instructed: int = 0


def _finite(values) -> list[float]:
    return [v for v in values if v is not None and math.isfinite(v)]


def aggregate_scene(records: list[EvaluationRecord]) -> SceneAggregate:
    """Best/avg/worst over one scene's finite instructed ADEs."""
    if not records:
        raise MetricsError("aggregate_scene needs at least one record")
    scene_ids = {r.scene_id for r in records}
    if len(scene_ids) != 1:
        raise MetricsError(f"records span multiple scenes: {sorted(scene_ids)}")
    baseline = _finite(r.ade for r in records if r.condition == "baseline")
    instructed = _finite(r.ade for r in records if r.condition == "instructed")
    best = min(instructed) if instructed else None
    worst = max(instructed) if instructed else None
    avg = None
    if instructed:
        # Summation can drift one ulp outside [min, max]; the true mean
        # never does, so pin it back.
        avg = min(max(sum(instructed) / len(instructed), best), worst)
    return SceneAggregate(
        scene_id=next(iter(scene_ids)),
        baseline_ade=sum(baseline) / len(baseline) if baseline else None,
        best_ade=best,
        avg_ade=avg,
        worst_ade=worst,
        n_instructed=len(instructed),
    )


def group_by_scene(records: list[EvaluationRecord]) -> dict[str, list[EvaluationRecord]]:
    grouped: dict[str, list[EvaluationRecord]] = {}
    for record in records:
        grouped.setdefault(record.scene_id, []).append(record)
    return grouped


def quantile(values: list[float], q: float) -> float:
    """Empirical quantile with linear interpolation between order statistics."""
    if not values:
        raise MetricsError("quantile of empty list")
    if not 0.0 <= q <= 1.0:
        raise MetricsError(f"quantile fraction must be in [0, 1], got {q}")
    ordered = sorted(values)
    h = (len(ordered) - 1) * q
    lo = int(math.floor(h))
    frac = h - lo
    if lo + 1 >= len(ordered):
        return ordered[-1]
    return ordered[lo] + frac * (ordered[lo + 1] - ordered[lo])


@dataclass(frozen=True)
class FilterResult:
    kept: tuple[str, ...]
    dropped: tuple[str, ...]
    threshold: float


def percentile_filter(
    records: list[EvaluationRecord], q: float = 0.975, score_mode: str = "pooled"
) -> FilterResult:
    """Drop scenes whose error score exceeds the empirical q-quantile.

    A scene's score is the max finite ADE over its records; score_mode
    restricts which condition contributes ("pooled" uses both). Scenes
    with no finite score at all are kept (they carry no error signal).
    """
    if not 0.0 < q < 1.0:
        raise MetricsError(f"q must be in (0, 1), got {q}")
    if score_mode not in ("pooled", "baseline", "instructed"):
        raise MetricsError(f"unknown score_mode {score_mode!r}")
    grouped = group_by_scene(records)
    scores: dict[str, float] = {}
    unscored: list[str] = []
    for scene_id, scene_records in grouped.items():
        if score_mode == "pooled":
            pool = scene_records
        else:
            pool = [r for r in scene_records if r.condition == score_mode]
        finite = _finite(r.ade for r in pool)
        if finite:
            scores[scene_id] = max(finite)
        else:
            unscored.append(scene_id)
    if not scores:
        raise MetricsError("no scene has a finite ADE to filter on")
    threshold = quantile(list(scores.values()), q)
    kept = [sid for sid, s in scores.items() if s <= threshold] + unscored
    dropped = [sid for sid, s in scores.items() if s > threshold]
    return FilterResult(kept=tuple(sorted(kept)), dropped=tuple(sorted(dropped)), threshold=threshold)
