"""HTTP surface for the playground and scripted clients.

Exposes the loaded manifest plus an on-demand planning endpoint that runs
the full pipeline for one scene. Planning is synchronous and serialized
through a single slot: concurrent requests get 409 rather than queueing,
matching how a passenger phrases, waits, and re-phrases.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import Body, FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse

from . import metrics, prompting, runner, vlm
from .dataset import load_annotations, load_manifest


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": status, "message": message})


def create_app(
    manifest_path: str,
    annotations_path: str | None = None,
    backend: vlm.BackendConfig | None = None,
    *,
    seed: int = 0,
    frames_per_call: int = 6,
    reprompt_limit: int = 2,
    oob_margin: float = metrics.DEFAULT_OOB_MARGIN,
    inject_stages: str = "all",
    cors_origins: tuple[str, ...] = ("*",),
) -> FastAPI:
    """Build the app; raises DatasetError on a malformed manifest so a
    broken deployment refuses to start instead of serving garbage."""
    manifest = load_manifest(manifest_path)
    annotations = load_annotations(annotations_path) if annotations_path else []
    backend = backend or vlm.BackendConfig()
    config = runner.RunConfig(
        manifest_path=manifest_path,
        out_path="",
        backend=backend,
        seed=seed,
        frames_per_call=frames_per_call,
        reprompt_limit=reprompt_limit,
        oob_margin=oob_margin,
        inject_stages=inject_stages,
    )

    scenes = {s.scene_id: s for s in manifest.scenes}
    annotations_by_scene: dict[str, list] = {}
    for ann in annotations:
        annotations_by_scene.setdefault(ann.scene_id, []).append(ann)

    app = FastAPI(title="plansteer service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    plan_slot = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def validation_error(_, exc: RequestValidationError):
        return _error(422, f"invalid request body: {exc.errors()[:1]}")

    @app.get("/api/scenes")
    def list_scenes():
        return [
            {
                "scene_id": s.scene_id,
                "frame_count": len(s.frames),
                "has_ground_truth": len(s.ground_truth) > 0,
            }
            for s in sorted(manifest.scenes, key=lambda s: s.scene_id)
        ]

    @app.get("/api/scenes/{scene_id}")
    def scene_detail(scene_id: str):
        scene = scenes.get(scene_id)
        if scene is None:
            return _error(404, f"unknown scene: {scene_id}")
        return {
            "scene_id": scene.scene_id,
            "dt_seconds": manifest.dt_seconds,
            "horizon": manifest.horizon,
            "bounds": scene.bounds.to_dict(),
            "ego_history": [
                {"t": e.t, "x": e.x, "y": e.y, "heading": e.heading, "speed": e.speed}
                for e in scene.ego_history
            ],
            "ground_truth": [list(p) for p in scene.ground_truth],
            "frames": [
                {"url": f"/frames/{scene.scene_id}/{i}", "t": f.t}
                for i, f in enumerate(scene.frames)
            ],
            "annotations": [
                {
                    "annotation_id": a.annotation_id,
                    "annotator_id": a.annotator_id,
                    "text": a.text,
                    "refs_static": a.refs_static,
                    "refs_dynamic": a.refs_dynamic,
                    "actionable": a.actionable,
                    "referentiality": metrics.referentiality_category(
                        a.refs_static, a.refs_dynamic
                    ).value,
                }
                for a in annotations_by_scene.get(scene_id, [])
            ],
        }

    @app.get("/frames/{scene_id}/{index}")
    def frame(scene_id: str, index: int):
        scene = scenes.get(scene_id)
        if scene is None or not 0 <= index < len(scene.frames):
            return _error(404, f"unknown frame: {scene_id}/{index}")
        path = Path(scene.frames[index].path)
        if not path.exists():
            return _error(404, f"frame file missing: {path}")
        return FileResponse(path)

    @app.post("/api/scenes/{scene_id}/plan")
    def plan(scene_id: str, body: dict | None = Body(default=None)):
        # Sync endpoint on purpose: it runs in the threadpool, so a second
        # request can observe the busy slot while a plan is in flight.
        scene = scenes.get(scene_id)
        if scene is None:
            return _error(404, f"unknown scene: {scene_id}")
        if body is None:
            body = {}
        if not isinstance(body, dict):
            return _error(422, "request body must be a JSON object")
        instruction = body.get("instruction")
        if instruction is not None:
            if not isinstance(instruction, str) or not instruction.strip():
                return _error(422, "instruction must be a non-empty string")
        plan_seed = body.get("seed", seed)
        if not isinstance(plan_seed, int):
            return _error(422, "seed must be an integer")

        if not plan_slot.acquire(blocking=False):
            return _error(409, "planner busy: another plan request is in flight")
        try:
            started = time.monotonic()
            condition = (
                prompting.Condition.instructed(instruction)
                if instruction is not None
                else prompting.Condition.baseline()
            )
            run_config = runner.RunConfig(
                manifest_path=config.manifest_path,
                out_path="",
                backend=config.backend,
                seed=plan_seed,
                frames_per_call=config.frames_per_call,
                reprompt_limit=config.reprompt_limit,
                oob_margin=config.oob_margin,
                inject_stages=config.inject_stages,
            )
            result = runner.run_scene(
                scene, condition, run_config,
                horizon=manifest.horizon, dt=manifest.dt_seconds,
            )
            record = result.record
            if record.failure and record.failure.startswith("transport"):
                return _error(502, f"model backend failure: {record.failure}")
            word_count = record.word_count
            return {
                "scene_id": scene.scene_id,
                "condition": record.condition,
                "instruction": record.instruction_text,
                "seed": plan_seed,
                "stage_texts": record.stage_texts,
                "prompt_audit": result.prompts,
                "speeds": list(record.speeds) if record.speeds is not None else None,
                "curvatures": list(record.curvatures) if record.curvatures is not None else None,
                "ego_waypoints": [list(p) for p in result.ego_waypoints]
                if result.ego_waypoints is not None else None,
                "waypoints": [list(p) for p in record.waypoints]
                if record.waypoints is not None else None,
                "ade": record.ade,
                "out_of_bounds": record.out_of_bounds,
                "parse_tier": record.parse_tier,
                "clamp_count": record.clamp_count,
                "failure": record.failure,
                "word_count": word_count,
                "length_bucket": metrics.bucket_for_count(word_count).label
                if word_count is not None else None,
                "referentiality": record.referentiality,
                "elapsed_s": time.monotonic() - started,
            }
        finally:
            plan_slot.release()

    return app
