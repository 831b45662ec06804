"""Command-line entry points: run batches, render reports, serve the API."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import report as report_mod
from . import runner, vlm
from .dataset import DatasetError, load_scenes

ENV_BASE_URL = "PLANSTEER_BASE_URL"
ENV_API_KEY = "PLANSTEER_API_KEY"


def _backend_from_args(args) -> vlm.BackendConfig:
    settings: dict = {}
    if getattr(args, "config", None):
        settings.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    base_url = args.base_url or os.environ.get(ENV_BASE_URL) or settings.get("base_url")
    api_key = os.environ.get(ENV_API_KEY) or settings.get("api_key")
    script = vlm.MockScript()
    if args.backend == "mock" and getattr(args, "mock_script", None):
        script = vlm.load_mock_script(args.mock_script)
    return vlm.BackendConfig(
        kind=args.backend,
        base_url=base_url,
        api_key=api_key,
        model=getattr(args, "model", None) or settings.get("model", "llava-v1.6-mistral-7b"),
        timeout_s=float(settings.get("timeout_s", vlm.DEFAULT_TIMEOUT_S)),
        mock_script=script,
    )


def _add_backend_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["mock", "http"], default="mock")
    parser.add_argument("--base-url", default=None,
                        help=f"chat-completions server base URL (or ${ENV_BASE_URL})")
    parser.add_argument("--model", default=None, help="model name sent to the server")
    parser.add_argument("--mock-script", default=None,
                        help="JSON rule file for the mock backend")
    parser.add_argument("--config", default=None,
                        help="JSON file with backend settings (base_url, api_key, model)")


def cmd_run(args) -> int:
    config = runner.RunConfig(
        manifest_path=args.manifest,
        annotations_path=args.annotations,
        out_path=args.out,
        backend=_backend_from_args(args),
        conditions=args.conditions,
        frames_per_call=args.frames_per_call,
        max_in_flight=args.k,
        reprompt_limit=args.reprompt_limit,
        seed=args.seed,
        oob_margin=args.oob_margin,
        inject_stages=args.inject_stages,
    )
    summary = runner.run_batch(config)
    print(json.dumps(summary.to_dict(), indent=2))
    return 0 if summary.failed == 0 else 1


def cmd_report(args) -> int:
    _, records = runner.load_results(args.results)
    if not records:
        print(f"no records in {args.results}", file=sys.stderr)
        return 1
    scenes = load_scenes(args.manifest) if args.manifest else None
    summary = report_mod.write_report(
        records, args.out_dir, q=args.q, scenes=scenes, score_mode=args.score_mode,
    )
    print(json.dumps(summary, indent=2))
    return 0


def cmd_serve(args) -> int:
    from .service import create_app

    try:
        app = create_app(
            manifest_path=args.manifest,
            annotations_path=args.annotations,
            backend=_backend_from_args(args),
            seed=args.seed,
            frames_per_call=args.frames_per_call,
            inject_stages=args.inject_stages,
        )
    except DatasetError as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 2

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plansteer",
        description="Evaluate passenger-instruction conditioning of a driving planner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run paired baseline/instructed evaluations")
    run_p.add_argument("--manifest", required=True)
    run_p.add_argument("--annotations", default=None)
    run_p.add_argument("--out", required=True, help="append-only results JSONL")
    run_p.add_argument("--conditions", choices=["baseline", "instructed", "both"],
                       default="both")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--k", type=int, default=1, help="max in-flight requests")
    run_p.add_argument("--frames-per-call", type=int, default=6)
    run_p.add_argument("--reprompt-limit", type=int, default=2)
    run_p.add_argument("--oob-margin", type=float, default=30.0)
    run_p.add_argument("--inject-stages", choices=["all", "scene_only"], default="all")
    _add_backend_args(run_p)
    run_p.set_defaults(func=cmd_run)

    report_p = sub.add_parser("report", help="render tables and overlays from a results log")
    report_p.add_argument("--results", required=True)
    report_p.add_argument("--q", type=float, default=0.975)
    report_p.add_argument("--score-mode", choices=["pooled", "baseline", "instructed"],
                          default="pooled",
                          help="which condition's ADEs define a scene's outlier score")
    report_p.add_argument("--out-dir", required=True)
    report_p.add_argument("--manifest", default=None,
                          help="scene manifest; enables per-scene overlay documents")
    report_p.set_defaults(func=cmd_report)

    serve_p = sub.add_parser("serve", help="serve scenes and on-demand planning over HTTP")
    serve_p.add_argument("--manifest", required=True)
    serve_p.add_argument("--annotations", default=None)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8777)
    serve_p.add_argument("--seed", type=int, default=0)
    serve_p.add_argument("--frames-per-call", type=int, default=6)
    serve_p.add_argument("--inject-stages", choices=["all", "scene_only"], default="all")
    _add_backend_args(serve_p)
    serve_p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, runner.RunnerError, vlm.VlmError, report_mod.ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
