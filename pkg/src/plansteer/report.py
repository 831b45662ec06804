"""Turn results logs into comparison tables, failure summaries, and
plot-ready overlay documents.

All numbers render at three decimals (round-half-even, via format) and
percentages at one decimal. Rendering is deterministic: the same log
produces byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

from . import metrics
from .dataset import SceneRecord
from .metrics import (
    BUCKET_ORDER,
    REFERENTIALITY_ORDER,
    EvaluationRecord,
    LengthBucket,
    ReferentialityCategory,
    aggregate_scene,
    bucket_for_count,
    group_by_scene,
    percentile_filter,
)


class ReportError(Exception):
    pass


def fmt3(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def improvement_percent(baseline: float, treated: float) -> float:
    """Relative ADE reduction of the treated condition, in percent."""
    if baseline <= 0:
        raise ReportError(f"baseline must be positive, got {baseline}")
    return 100.0 * (baseline - treated) / baseline


def format_percent(value: float) -> str:
    return f"{value:.1f}%"


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _finite_ades(records: list[EvaluationRecord], condition: str) -> list[float]:
    return [
        r.ade for r in records
        if r.condition == condition and r.ade is not None and math.isfinite(r.ade)
    ]


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    baseline_avg: float | None
    best: float | None
    avg: float | None
    worst: float | None


@dataclass(frozen=True)
class ConditionComparison:
    all_row: ComparisonRow
    filtered_row: ComparisonRow
    q: float
    threshold: float
    dropped: tuple[str, ...]


def _row_from_aggregates(label: str, aggs: list[metrics.SceneAggregate]) -> ComparisonRow:
    return ComparisonRow(
        label=label,
        baseline_avg=_mean([a.baseline_ade for a in aggs if a.baseline_ade is not None]),
        best=_mean([a.best_ade for a in aggs if a.best_ade is not None]),
        avg=_mean([a.avg_ade for a in aggs if a.avg_ade is not None]),
        worst=_mean([a.worst_ade for a in aggs if a.worst_ade is not None]),
    )


def table_condition_comparison(
    records: list[EvaluationRecord], q: float = 0.975, score_mode: str = "pooled"
) -> ConditionComparison:
    """Mean-over-scenes comparison, unfiltered and outlier-filtered."""
    if not records:
        raise ReportError("no records to report on")
    for condition in ("baseline", "instructed"):
        if not _finite_ades(records, condition):
            raise ReportError(f"no scored records for condition: {condition}")
    grouped = group_by_scene(records)
    aggs = [aggregate_scene(rs) for rs in grouped.values()]
    result = percentile_filter(records, q, score_mode=score_mode)
    kept = set(result.kept)
    kept_aggs = [a for a in aggs if a.scene_id in kept]
    q_label = f"Mean (Q{q * 100:g})"
    return ConditionComparison(
        all_row=_row_from_aggregates("Mean (All)", aggs),
        filtered_row=_row_from_aggregates(q_label, kept_aggs),
        q=q,
        threshold=result.threshold,
        dropped=result.dropped,
    )


@dataclass(frozen=True)
class BucketRow:
    bucket: LengthBucket
    baseline_mean: float | None
    instructed_mean: float | None
    n_instructed: int


def table_length_buckets(
    records: list[EvaluationRecord], q: float = 0.975, score_mode: str = "pooled"
) -> list[BucketRow]:
    """Per-bucket instructed mean ADE with the matched-scene baseline mean.

    The baseline column is restricted to scenes that contribute instructed
    records to the row; empty buckets produce no row.
    """
    kept = set(percentile_filter(records, q, score_mode=score_mode).kept)
    kept_records = [r for r in records if r.scene_id in kept]
    rows: list[BucketRow] = []
    for bucket in BUCKET_ORDER:
        members = [
            r for r in kept_records
            if r.condition == "instructed"
            and r.ade is not None and math.isfinite(r.ade)
            and r.word_count is not None
            and bucket_for_count(r.word_count) is bucket
        ]
        if not members:
            continue
        scenes = {r.scene_id for r in members}
        baseline = [
            r.ade for r in kept_records
            if r.condition == "baseline" and r.scene_id in scenes
            and r.ade is not None and math.isfinite(r.ade)
        ]
        rows.append(BucketRow(
            bucket=bucket,
            baseline_mean=_mean(baseline),
            instructed_mean=_mean([r.ade for r in members]),
            n_instructed=len(members),
        ))
    return rows


@dataclass(frozen=True)
class ReferentialityRow:
    category: ReferentialityCategory
    baseline_mean: float | None
    instructed_mean: float | None
    n_instructed: int
    highlighted: bool = False


def table_referentiality(
    records: list[EvaluationRecord], q: float = 0.975, score_mode: str = "pooled"
) -> list[ReferentialityRow]:
    """Per-referentiality-category means; the lowest instructed mean is flagged."""
    kept = set(percentile_filter(records, q, score_mode=score_mode).kept)
    kept_records = [r for r in records if r.scene_id in kept]
    rows: list[ReferentialityRow] = []
    for category in REFERENTIALITY_ORDER:
        members = [
            r for r in kept_records
            if r.condition == "instructed"
            and r.ade is not None and math.isfinite(r.ade)
            and r.referentiality == category.value
        ]
        if not members:
            continue
        scenes = {r.scene_id for r in members}
        baseline = [
            r.ade for r in kept_records
            if r.condition == "baseline" and r.scene_id in scenes
            and r.ade is not None and math.isfinite(r.ade)
        ]
        rows.append(ReferentialityRow(
            category=category,
            baseline_mean=_mean(baseline),
            instructed_mean=_mean([r.ade for r in members]),
            n_instructed=len(members),
        ))
    best = min(
        (r.instructed_mean for r in rows if r.instructed_mean is not None), default=None
    )
    return [
        ReferentialityRow(
            category=r.category,
            baseline_mean=r.baseline_mean,
            instructed_mean=r.instructed_mean,
            n_instructed=r.n_instructed,
            highlighted=r.instructed_mean is not None and r.instructed_mean == best,
        )
        for r in rows
    ]


def overlay_data(scene: SceneRecord, records: list[EvaluationRecord]) -> dict:
    """One plot-ready document per scene for the playground and plotting scripts."""
    if not records:
        raise ReportError(f"no records for scene {scene.scene_id}")
    attempts = []
    for r in records:
        if r.scene_id != scene.scene_id:
            raise ReportError(f"record for {r.scene_id} mixed into scene {scene.scene_id}")
        attempts.append({
            "condition": r.condition,
            "annotation_id": r.annotation_id,
            "instruction": r.instruction_text,
            "ade": r.ade,
            "out_of_bounds": r.out_of_bounds,
            "parse_tier": r.parse_tier,
            "failure": r.failure,
            "waypoints": [list(p) for p in r.waypoints] if r.waypoints is not None else None,
        })
    return {
        "scene_id": scene.scene_id,
        "bounds": scene.bounds.to_dict(),
        "ground_truth": [list(p) for p in scene.ground_truth],
        "attempts": attempts,
    }


# --- rendering -------------------------------------------------------------

def _align(rows: list[list[str]], gap: str = "   ") -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = [gap.join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


def render_condition_table_text(table: ConditionComparison) -> str:
    rows = [
        ["", "Baseline", "Instructed", "", ""],
        ["", "Avg ADE", "Best ADE", "Avg ADE", "Worst ADE"],
    ]
    for row in (table.all_row, table.filtered_row):
        rows.append([
            row.label, fmt3(row.baseline_avg), fmt3(row.best), fmt3(row.avg), fmt3(row.worst),
        ])
    return _align(rows)


def render_condition_table_csv(table: ConditionComparison) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([
        "row", "baseline_avg_ade", "instructed_best_ade",
        "instructed_avg_ade", "instructed_worst_ade",
    ])
    for row in (table.all_row, table.filtered_row):
        writer.writerow([
            row.label, fmt3(row.baseline_avg), fmt3(row.best), fmt3(row.avg), fmt3(row.worst),
        ])
    return out.getvalue()


def render_bucket_table_text(rows: list[BucketRow], q: float) -> str:
    header = ["Bucket", "Word Range", f"Baseline ADE (Q{q * 100:g})",
              f"Instructed ADE (Q{q * 100:g})"]
    body = [[r.bucket.label, r.bucket.word_range, fmt3(r.baseline_mean),
             fmt3(r.instructed_mean)] for r in rows]
    return _align([header] + body)


def render_bucket_table_csv(rows: list[BucketRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["bucket", "word_range", "baseline_ade", "instructed_ade", "n_instructed"])
    for r in rows:
        writer.writerow([
            r.bucket.label, r.bucket.word_range, fmt3(r.baseline_mean),
            fmt3(r.instructed_mean), r.n_instructed,
        ])
    return out.getvalue()


def render_referentiality_table_text(rows: list[ReferentialityRow], q: float) -> str:
    header = ["Referentiality", f"Baseline ADE (Q{q * 100:g})",
              f"Instructed ADE (Q{q * 100:g})"]
    body = []
    for r in rows:
        cell = fmt3(r.instructed_mean) + (" *" if r.highlighted else "")
        body.append([r.category.label, fmt3(r.baseline_mean), cell])
    return _align([header] + body)


def render_referentiality_table_csv(rows: list[ReferentialityRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["referentiality", "baseline_ade", "instructed_ade",
                     "n_instructed", "lowest"])
    for r in rows:
        writer.writerow([
            r.category.label, fmt3(r.baseline_mean), fmt3(r.instructed_mean),
            r.n_instructed, str(r.highlighted).lower(),
        ])
    return out.getvalue()


def failure_summary(records: list[EvaluationRecord]) -> list[dict]:
    rows = []
    for condition in ("baseline", "instructed"):
        subset = [r for r in records if r.condition == condition]
        if not subset:
            continue
        failures = [r for r in subset if r.failure]
        parse_failures = [r for r in failures if r.failure.startswith("parse")]
        transport_failures = [r for r in failures if r.failure.startswith("transport")]
        tiers: dict[str, int] = {}
        for r in subset:
            if r.parse_tier is not None:
                tiers[str(r.parse_tier)] = tiers.get(str(r.parse_tier), 0) + 1
        rows.append({
            "condition": condition,
            "records": len(subset),
            "scored": sum(1 for r in subset if r.ade is not None),
            "parse_failures": len(parse_failures),
            "transport_failures": len(transport_failures),
            "other_failures": len(failures) - len(parse_failures) - len(transport_failures),
            "failure_rate": len(failures) / len(subset),
            "out_of_bounds": sum(1 for r in subset if r.out_of_bounds),
            "clamped_values": sum(r.clamp_count for r in subset),
            "parse_tiers": tiers,
        })
    return rows


def render_failures_text(rows: list[dict]) -> str:
    header = ["Condition", "Records", "Scored", "Parse Fail", "Transport Fail",
              "Other Fail", "Fail Rate", "OOB", "Clamps", "Tiers"]
    body = []
    for r in rows:
        tiers = ",".join(f"{k}:{v}" for k, v in sorted(r["parse_tiers"].items()))
        body.append([
            r["condition"], str(r["records"]), str(r["scored"]),
            str(r["parse_failures"]), str(r["transport_failures"]),
            str(r["other_failures"]), f"{r['failure_rate']:.3f}",
            str(r["out_of_bounds"]), str(r["clamped_values"]), tiers or "-",
        ])
    return _align([header] + body)


def render_failures_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["condition", "records", "scored", "parse_failures",
                     "transport_failures", "other_failures", "failure_rate",
                     "out_of_bounds", "clamped_values", "parse_tiers"])
    for r in rows:
        tiers = ";".join(f"{k}:{v}" for k, v in sorted(r["parse_tiers"].items()))
        writer.writerow([
            r["condition"], r["records"], r["scored"], r["parse_failures"],
            r["transport_failures"], r["other_failures"],
            f"{r['failure_rate']:.3f}", r["out_of_bounds"], r["clamped_values"], tiers,
        ])
    return out.getvalue()


def write_report(
    records: list[EvaluationRecord],
    out_dir: str | Path,
    q: float = 0.975,
    scenes: list[SceneRecord] | None = None,
    score_mode: str = "pooled",
) -> dict:
    """Write table1/2/3 + failures (txt and csv) and per-scene overlays."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    table1 = table_condition_comparison(records, q, score_mode=score_mode)
    (out / "table1.txt").write_text(render_condition_table_text(table1), encoding="utf-8")
    (out / "table1.csv").write_text(render_condition_table_csv(table1), encoding="utf-8")

    table2 = table_length_buckets(records, q, score_mode=score_mode)
    (out / "table2.txt").write_text(render_bucket_table_text(table2, q), encoding="utf-8")
    (out / "table2.csv").write_text(render_bucket_table_csv(table2), encoding="utf-8")

    table3 = table_referentiality(records, q, score_mode=score_mode)
    (out / "table3.txt").write_text(
        render_referentiality_table_text(table3, q), encoding="utf-8"
    )
    (out / "table3.csv").write_text(render_referentiality_table_csv(table3), encoding="utf-8")

    failures = failure_summary(records)
    (out / "failures.txt").write_text(render_failures_text(failures), encoding="utf-8")
    (out / "failures.csv").write_text(render_failures_csv(failures), encoding="utf-8")

    overlay_count = 0
    if scenes:
        overlays_dir = out / "overlays"
        overlays_dir.mkdir(exist_ok=True)
        grouped = group_by_scene(records)
        for scene in scenes:
            scene_records = grouped.get(scene.scene_id)
            if not scene_records:
                continue
            doc = overlay_data(scene, scene_records)
            (overlays_dir / f"{scene.scene_id}.json").write_text(
                json.dumps(doc, indent=2), encoding="utf-8"
            )
            overlay_count += 1

    baseline = table1.filtered_row.baseline_avg
    best = table1.filtered_row.best
    summary = {
        "q": q,
        "threshold": table1.threshold,
        "dropped_scenes": list(table1.dropped),
        "overlays": overlay_count,
    }
    if table1.all_row.baseline_avg and table1.all_row.avg is not None:
        summary["improvement_all_pct"] = improvement_percent(
            table1.all_row.baseline_avg, table1.all_row.avg
        )
    if baseline and best is not None:
        summary["improvement_q_best_pct"] = improvement_percent(baseline, best)
    (out / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return summary
