"""Batch orchestration: paired baseline/instructed runs over a manifest.

Each work item drives the four-call prompt chain against the configured
backend, parses the plan, integrates it, and scores it against ground
truth. Results append to a JSONL log keyed by (scene_id, condition,
annotation_id), so an interrupted batch resumes without recomputing
completed triples.
"""

from __future__ import annotations

import datetime as _dt
import functools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import kinematics, metrics, prompting, trajparse, vlm
from .dataset import (
    InstructionAnnotation,
    Manifest,
    SceneRecord,
    filter_actionable,
    join_scene_annotations,
    load_annotations,
    load_manifest,
)

RESULTS_VERSION = 1


class RunnerError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    manifest_path: str
    out_path: str
    annotations_path: str | None = None
    backend: vlm.BackendConfig = field(default_factory=vlm.BackendConfig)
    conditions: str = "both"  # "baseline" | "instructed" | "both"
    horizon: int | None = None  # None = manifest header value
    dt: float | None = None
    frames_per_call: int = 6
    max_in_flight: int = 1
    reprompt_limit: int = 2
    seed: int = 0
    oob_margin: float = metrics.DEFAULT_OOB_MARGIN
    inject_stages: str = "all"  # "all" | "scene_only"

    def __post_init__(self) -> None:
        if self.conditions not in ("baseline", "instructed", "both"):
            raise RunnerError(f"unknown conditions {self.conditions!r}")
        if self.horizon is not None and self.horizon < 1:
            raise RunnerError("horizon must be >= 1")
        if self.max_in_flight < 1:
            raise RunnerError("max_in_flight must be >= 1")
        if self.reprompt_limit < 0:
            raise RunnerError("reprompt_limit must be >= 0")
        if self.frames_per_call < 1:
            raise RunnerError("frames_per_call must be >= 1")
        if self.inject_stages not in ("all", "scene_only"):
            raise RunnerError(f"unknown inject_stages {self.inject_stages!r}")


@dataclass(frozen=True)
class SceneRun:
    """A scored run plus the audit trail the service exposes."""

    record: metrics.EvaluationRecord
    prompts: dict  # stage name -> exact prompt text sent
    ego_waypoints: tuple[tuple[float, float], ...] | None = None


# Frames repeat across the four stage calls and both conditions of a scene;
# a bounded cache avoids re-reading without holding a whole corpus in memory.
@functools.lru_cache(maxsize=256)
def _read_frame(path: str) -> bytes:
    return Path(path).read_bytes()


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _stage_condition(condition: prompting.Condition, stage_injected: bool) -> prompting.Condition:
    if condition.kind is prompting.ConditionKind.BASELINE or stage_injected:
        return condition
    return prompting.Condition.baseline()


def run_scene(
    scene: SceneRecord,
    condition: prompting.Condition,
    config: RunConfig,
    annotation: InstructionAnnotation | None = None,
    horizon: int = 10,
    dt: float = 0.5,
) -> SceneRun:
    """Drive the full prompt->model->parse->integrate->score chain once.

    Model and parse failures yield a failed record (no ADE), never an
    exception: one bad item must not take down the batch.
    """
    started = time.monotonic()
    instructed = condition.kind is prompting.ConditionKind.INSTRUCTED
    if instructed and annotation is None:
        annotation = InstructionAnnotation(
            scene_id=scene.scene_id,
            annotation_id="adhoc",
            annotator_id="adhoc",
            text=condition.instruction,
        )

    inject_all = config.inject_stages == "all"

    stage_texts: dict[str, str] = {}
    prompts: dict[str, str] = {}

    def fail(reason: str) -> SceneRun:
        record = _make_record(
            scene, condition, annotation, config,
            ade_value=None, oob=False, parse=None,
            waypoints=None, stage_texts=stage_texts,
            failure=reason, elapsed=time.monotonic() - started,
        )
        return SceneRun(record=record, prompts=prompts)

    try:
        frames = tuple(
            _read_frame(f.path) for f in scene.frames[-config.frames_per_call:]
        )
    except OSError as exc:
        return fail(f"frames: {exc}")

    builders = (
        ("scene_description", lambda c: prompting.build_scene_description_prompt(c, image_count=len(frames))),
        ("object_identification", lambda c: prompting.build_object_identification_prompt(c, image_count=len(frames))),
        ("intent_estimation", lambda c: prompting.build_intent_prompt(c, image_count=len(frames))),
    )
    for i, (name, build) in enumerate(builders):
        stage_cond = _stage_condition(condition, inject_all or i == 0)
        try:
            stage = build(stage_cond)
        except prompting.PromptError as exc:
            return fail(f"prompt:{name}: {exc}")
        prompts[name] = stage.text
        request = vlm.ModelRequest(
            user_text=stage.text, images=frames, seed=config.seed,
        )
        try:
            response = vlm.complete(request, config.backend)
        except vlm.VlmError as exc:
            return fail(f"transport:{name}: {exc}")
        stage_texts[name] = response.text
        if not response.text.strip():
            return fail(f"empty_stage:{name}")

    try:
        intent_summary = trajparse.parse_intent_text(stage_texts["intent_estimation"])
    except trajparse.EmptyResponse:
        return fail("empty_stage:intent_estimation")
    ego_summary = prompting.build_ego_summary(scene.ego_history)

    traj_cond = _stage_condition(condition, inject_all)
    traj_stage = prompting.build_trajectory_prompt(
        traj_cond,
        stage_outputs=(
            stage_texts["scene_description"],
            stage_texts["object_identification"],
            intent_summary,
        ),
        ego_summary=ego_summary,
        horizon=horizon,
        dt=dt,
    )
    prompts["trajectory_request"] = traj_stage.text

    parse: trajparse.TrajectoryParse | None = None
    last_parse_error: Exception | None = None
    for attempt in range(config.reprompt_limit + 1):
        # Same prompt bytes on every attempt; only the sampling seed moves,
        # so the baseline/instructed prompt pairing stays byte-comparable.
        request = vlm.ModelRequest(
            user_text=traj_stage.text, images=(), seed=config.seed + attempt,
        )
        try:
            response = vlm.complete(request, config.backend)
        except vlm.VlmError as exc:
            return fail(f"transport:trajectory_request: {exc}")
        stage_texts["trajectory_request"] = response.text
        try:
            parse = trajparse.parse_trajectory_text(response.text, horizon=horizon)
            break
        except trajparse.ParseError as exc:
            last_parse_error = exc
    if parse is None:
        return fail(f"parse: {last_parse_error}")

    ego_traj = kinematics.integrate(parse.seq, dt=dt)
    start_pose = kinematics.initial_pose_from_history(scene.ego_history)
    global_traj = kinematics.to_global(ego_traj, start_pose)
    ade_value = metrics.ade(global_traj, scene.ground_truth)
    oob = metrics.out_of_bounds(global_traj, scene.bounds, margin=config.oob_margin)

    record = _make_record(
        scene, condition, annotation, config,
        ade_value=ade_value, oob=oob, parse=parse,
        waypoints=global_traj.points, stage_texts=stage_texts,
        failure=None, elapsed=time.monotonic() - started,
    )
    return SceneRun(record=record, prompts=prompts, ego_waypoints=ego_traj.points)


def _make_record(
    scene: SceneRecord,
    condition: prompting.Condition,
    annotation: InstructionAnnotation | None,
    config: RunConfig,
    *,
    ade_value: float | None,
    oob: bool,
    parse: trajparse.TrajectoryParse | None,
    waypoints,
    stage_texts: dict,
    failure: str | None,
    elapsed: float,
) -> metrics.EvaluationRecord:
    instructed = condition.kind is prompting.ConditionKind.INSTRUCTED
    referentiality = None
    if instructed and annotation is not None and annotation.annotation_id != "adhoc":
        referentiality = metrics.referentiality_category(
            annotation.refs_static, annotation.refs_dynamic
        ).value
    return metrics.EvaluationRecord(
        scene_id=scene.scene_id,
        condition="instructed" if instructed else "baseline",
        annotation_id=annotation.annotation_id if instructed else None,
        instruction_text=condition.instruction if instructed else None,
        ade=ade_value,
        out_of_bounds=oob,
        parse_tier=parse.tier if parse is not None else None,
        failure=failure,
        word_count=metrics.word_count(condition.instruction) if instructed else None,
        referentiality=referentiality,
        clamp_count=parse.clamp_count if parse is not None else 0,
        speeds=parse.seq.speeds if parse is not None else None,
        curvatures=parse.seq.curvatures if parse is not None else None,
        waypoints=tuple(waypoints) if waypoints is not None else None,
        stage_texts=dict(stage_texts),
        meta={
            "created_at": _now_iso(),
            "backend_id": config.backend.backend_id,
            "seed": config.seed,
            "elapsed_s": elapsed,
            "template_version": prompting.TEMPLATE_VERSION,
        },
    )


def load_results(path: str | Path) -> tuple[dict | None, list[metrics.EvaluationRecord]]:
    """Read a results log; tolerates a missing file (fresh run)."""
    path = Path(path)
    if not path.exists():
        return None, []
    header: dict | None = None
    records: list[metrics.EvaluationRecord] = []
    with path.open("r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RunnerError(f"{path}:{line_num}: invalid JSON: {exc}") from exc
            if doc.get("kind") == "header":
                header = doc
            else:
                records.append(metrics.EvaluationRecord.from_dict(doc))
    return header, records


@dataclass
class BatchSummary:
    total: int = 0
    completed: int = 0
    failed: int = 0
    skipped: int = 0
    baseline_records: int = 0
    instructed_records: int = 0
    clamps: int = 0
    parse_tiers: dict = field(default_factory=dict)
    rejected_annotations: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _work_items(
    manifest: Manifest, annotations: list[InstructionAnnotation], config: RunConfig
) -> tuple[list[tuple[SceneRecord, prompting.Condition, InstructionAnnotation | None]], int]:
    actionable = filter_actionable(annotations)
    joined, rejects = join_scene_annotations(list(manifest.scenes), actionable)
    items: list[tuple[SceneRecord, prompting.Condition, InstructionAnnotation | None]] = []
    for scene, scene_annotations in joined:
        if config.conditions in ("baseline", "both"):
            items.append((scene, prompting.Condition.baseline(), None))
        if config.conditions in ("instructed", "both"):
            for ann in scene_annotations:
                items.append((scene, prompting.Condition.instructed(ann.text), ann))
    return items, len(rejects)


def run_batch(config: RunConfig) -> BatchSummary:
    """Run every pending (scene, condition, annotation) triple and append results."""
    manifest = load_manifest(config.manifest_path)
    annotations = (
        load_annotations(config.annotations_path) if config.annotations_path else []
    )
    horizon = config.horizon if config.horizon is not None else manifest.horizon
    dt = config.dt if config.dt is not None else manifest.dt_seconds

    _, existing = load_results(config.out_path)
    done = {r.key for r in existing}

    items, rejected = _work_items(manifest, annotations, config)
    summary = BatchSummary(total=len(items), rejected_annotations=rejected)

    out_path = Path(config.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fresh = not out_path.exists() or out_path.stat().st_size == 0
    try:
        out = out_path.open("a", encoding="utf-8")
    except OSError as exc:
        raise RunnerError(f"cannot open results log {out_path}: {exc}") from exc

    with out:
        if fresh:
            header = {
                "kind": "header",
                "version": RESULTS_VERSION,
                "horizon": horizon,
                "dt": dt,
                "seed": config.seed,
                "backend_id": config.backend.backend_id,
                "meta": {"created_at": _now_iso()},
            }
            out.write(json.dumps(header) + "\n")
            out.flush()

        def key_of(item) -> tuple[str, str, str | None]:
            scene, condition, ann = item
            if condition.kind is prompting.ConditionKind.INSTRUCTED:
                return (scene.scene_id, "instructed", ann.annotation_id)
            return (scene.scene_id, "baseline", None)

        pending = []
        for item in items:
            if key_of(item) in done:
                summary.skipped += 1
            else:
                pending.append(item)

        def execute(item) -> metrics.EvaluationRecord:
            scene, condition, ann = item
            return run_scene(
                scene, condition, config, annotation=ann, horizon=horizon, dt=dt
            ).record

        def absorb(record: metrics.EvaluationRecord) -> None:
            out.write(json.dumps(record.to_dict()) + "\n")
            out.flush()
            if record.failure:
                summary.failed += 1
            else:
                summary.completed += 1
            if record.condition == "baseline":
                summary.baseline_records += 1
            else:
                summary.instructed_records += 1
            summary.clamps += record.clamp_count
            if record.parse_tier is not None:
                tier = str(record.parse_tier)
                summary.parse_tiers[tier] = summary.parse_tiers.get(tier, 0) + 1

        if config.max_in_flight == 1:
            # Serial path keeps the log order equal to submission order, so
            # repeat runs with the same seed are byte-comparable.
            for item in pending:
                absorb(execute(item))
        else:
            with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
                for record in pool.map(execute, pending):
                    absorb(record)

    return summary
