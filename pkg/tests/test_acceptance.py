"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py` to see them).
"""

from __future__ import annotations

import functools
import json
import math
import random
import socket
import time
from pathlib import Path

import pytest

from plansteer import fixtures, prompting, report, runner, vlm
from plansteer.kinematics import integrate
from plansteer.metrics import (
    EvaluationRecord,
    ReferentialityCategory,
    bucket_for_count,
    percentile_filter,
    referentiality_category,
)
from plansteer.trajparse import (
    NonFinite,
    ParseError,
    SpeedCurvatureSequence,
    WrongArity,
    format_trajectory_text,
    parse_trajectory_text,
)

from helpers import brute_force_ade, euler_positions, table1_records, table2_records, table3_records

GOLDEN = Path(__file__).parent / "data" / "golden"


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {name}")
                raise
            print(f"PASS  {name}")
            return result

        return wrapper

    return decorate


def seq(speeds, curvatures) -> SpeedCurvatureSequence:
    return SpeedCurvatureSequence(tuple(speeds), tuple(curvatures))


@criterion("kinematics oracle suite (straight / circle / Euler x1000) under 5 s")
def test_kinematics_oracles():
    started = time.monotonic()

    traj = integrate(seq([2.0] * 10, [0.0] * 10), dt=0.5)
    assert traj.points == tuple((float(k), 0.0) for k in range(1, 11))

    circle = integrate(seq([1.0] * 10, [0.1] * 10), dt=0.5)
    for x, y in circle.points:
        assert abs(x * x + (y - 10.0) ** 2 - 100.0) < 1e-9

    # 1,000 random bounded sequences vs a 1000-substep explicit-Euler oracle.
    # First-order Euler accumulates ~ T * v^2 * kappa * dt^2 / (2 * substeps)
    # of position error, so the curved regimes keep v^2*kappa <= 0.02 and sit
    # a factor of ~4 inside the 1e-4 m tolerance; the straight regime runs
    # the full clamped speed range where both integrators are exact.
    rng = random.Random(2026)
    for i in range(1000):
        regime = i % 3
        if regime == 0:
            speeds = [rng.uniform(0.0, 2.0) for _ in range(10)]
            curvatures = [rng.uniform(-0.005, 0.005) for _ in range(10)]
        elif regime == 1:
            speeds = [rng.uniform(0.0, 1.0) for _ in range(10)]
            curvatures = [rng.uniform(-0.02, 0.02) for _ in range(10)]
        else:
            speeds = [rng.uniform(0.0, 15.0) for _ in range(10)]
            curvatures = [0.0] * 10
        exact = integrate(seq(speeds, curvatures), dt=0.5).points
        approx = euler_positions(speeds, curvatures, dt=0.5, substeps=1000)
        for (ex, ey), (ax, ay) in zip(exact, approx):
            assert math.dist((ex, ey), (ax, ay)) < 1e-4

    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"kinematics suite took {elapsed:.2f} s"


@criterion("ADE identities (zero / 3-4-5 offset / 1000x brute force) under 5 s")
def test_ade_identities():
    from plansteer.metrics import ade

    started = time.monotonic()

    pts = [(float(k), float(k) / 3.0) for k in range(10)]
    assert ade(pts, pts) == 0.0

    shifted = [(x + 3.0, y + 4.0) for x, y in pts]
    assert ade(shifted, pts) == 5.0

    rng = random.Random(7)
    for _ in range(1000):
        n = rng.randint(1, 12)
        pred = [(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)) for _ in range(n)]
        gt = [(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)) for _ in range(n)]
        assert abs(ade(pred, gt) - brute_force_ade(pred, gt)) < 1e-12

    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"ADE suite took {elapsed:.2f} s"


@criterion("table arithmetic goldens (98.7% / 5.1% / tables I-III byte-identical)")
def test_table_goldens():
    assert report.format_percent(report.improvement_percent(6201.443, 78.527)) == "98.7%"
    assert report.format_percent(report.improvement_percent(2.879, 2.732)) == "5.1%"

    t1 = report.table_condition_comparison(table1_records(), q=0.975)
    assert report.render_condition_table_text(t1) == (GOLDEN / "table1.txt").read_text()
    assert report.render_condition_table_csv(t1) == (GOLDEN / "table1.csv").read_text()
    for value in ("6201.443", "9.999", "78.527", "151.420",
                  "2.879", "2.732", "2.929", "3.11"):
        assert value in report.render_condition_table_text(t1)

    rows2 = report.table_length_buckets(table2_records(), q=0.975)
    assert report.render_bucket_table_text(rows2, 0.975) == (GOLDEN / "table2.txt").read_text()
    assert report.render_bucket_table_csv(rows2) == (GOLDEN / "table2.csv").read_text()

    rows3 = report.table_referentiality(table3_records(), q=0.975)
    assert report.render_referentiality_table_text(rows3, 0.975) == (
        GOLDEN / "table3.txt"
    ).read_text()
    assert report.render_referentiality_table_csv(rows3) == (
        GOLDEN / "table3.csv"
    ).read_text()


def _scored(scene_id, value):
    return EvaluationRecord(scene_id=scene_id, condition="baseline", ade=value, parse_tier=1)


@criterion("percentile filter (849-scene bound / exact one-outlier drop / all-equal)")
def test_percentile_filter_criteria():
    rng = random.Random(849)
    for trial in range(5):
        records = [
            _scored(f"s{i:04d}", rng.lognormvariate(1.0, 2.0 + trial))
            for i in range(849)
        ]
        result = percentile_filter(records, q=0.975)
        assert len(result.dropped) <= 22  # ceil(0.025 * 849)

    forty = [_scored(f"s{i}", 1.0) for i in range(39)] + [_scored("outlier", 10_000.0)]
    result = percentile_filter(forty, q=0.975)
    assert result.dropped == ("outlier",)

    equal = [_scored(f"s{i}", 2.5) for i in range(25)]
    assert percentile_filter(equal, q=0.975).dropped == ()


@criterion("length-bucket and referentiality partitions (counts 0..40, 4 categories)")
def test_partition_criteria():
    boundaries = {4: "ultra_short", 5: "short", 8: "short", 9: "typical",
                  12: "typical", 13: "descriptive", 18: "descriptive", 19: "long"}
    for count in range(41):
        bucket = bucket_for_count(count)
        if count <= 4:
            assert bucket.value == "ultra_short"
        elif count <= 8:
            assert bucket.value == "short"
        elif count <= 12:
            assert bucket.value == "typical"
        elif count <= 18:
            assert bucket.value == "descriptive"
        else:
            assert bucket.value == "long"
    for count, expected in boundaries.items():
        assert bucket_for_count(count).value == expected

    categories = {
        referentiality_category(s, d)
        for s in (False, True) for d in (False, True)
    }
    assert categories == set(ReferentialityCategory)
    assert len(categories) == 4


@pytest.fixture
def no_network(monkeypatch):
    def refuse(self, *args, **kwargs):
        raise AssertionError("network access attempted during mock run")

    monkeypatch.setattr(socket.socket, "connect", refuse)


def _strip_meta(path: Path) -> list[dict]:
    docs = []
    for line in path.read_text().splitlines():
        doc = json.loads(line)
        doc.pop("meta", None)
        docs.append(doc)
    return docs


@criterion("end-to-end mock run (13 records, <30 s, no network, ADE-0 stop, clean resume)")
def test_end_to_end_mock_run(tmp_path, no_network):
    started = time.monotonic()
    script = vlm.load_mock_script(fixtures.mock_script_path())
    backend = vlm.BackendConfig(kind="mock", mock_script=script)

    def config(out_name):
        return runner.RunConfig(
            manifest_path=str(fixtures.manifest_path()),
            annotations_path=str(fixtures.annotations_path()),
            out_path=str(tmp_path / out_name),
            backend=backend,
            seed=2026,
        )

    summary = runner.run_batch(config("run_a.jsonl"))
    assert summary.total == 13
    assert summary.baseline_records == 5
    assert summary.instructed_records == 8
    assert summary.failed == 0

    _, records = runner.load_results(tmp_path / "run_a.jsonl")
    assert len(records) == 13

    stop = next(
        r for r in records
        if r.condition == "instructed" and r.instruction_text.startswith("Stop")
    )
    assert stop.scene_id == "scene-001"
    assert stop.ade == 0.0

    # Same seed, fresh log: byte-identical modulo the metadata field.
    runner.run_batch(config("run_b.jsonl"))
    assert _strip_meta(tmp_path / "run_a.jsonl") == _strip_meta(tmp_path / "run_b.jsonl")

    # Kill-and-resume: truncate run_a to header + 4 records, rerun, no dupes.
    log = tmp_path / "run_a.jsonl"
    lines = log.read_text().splitlines()
    log.write_text("\n".join(lines[:5]) + "\n")
    resumed = runner.run_batch(config("run_a.jsonl"))
    assert resumed.skipped == 4
    _, records = runner.load_results(log)
    keys = [r.key for r in records]
    assert len(keys) == len(set(keys)) == 13

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"mock run took {elapsed:.2f} s"


@criterion("parser corpus (>=20 labeled samples, 1000x round trip, typed errors)")
def test_parser_criteria():
    corpus = json.loads(
        (Path(__file__).parent / "data" / "parser_corpus.json").read_text()
    )
    assert len(corpus) >= 20
    errors = {"WrongArity": WrongArity, "NonFinite": NonFinite}
    malformed_seen = 0
    for sample in corpus:
        expect = sample["expect"]
        if "error" in expect:
            with pytest.raises(ParseError):
                parse_trajectory_text(sample["text"], horizon=sample["horizon"])
            if expect["error"] in errors:
                malformed_seen += 1
                with pytest.raises(errors[expect["error"]]):
                    parse_trajectory_text(sample["text"], horizon=sample["horizon"])
        else:
            result = parse_trajectory_text(sample["text"], horizon=sample["horizon"])
            assert list(result.seq.speeds) == expect["speeds"]
            assert list(result.seq.curvatures) == expect["curvatures"]
            assert result.tier == expect["tier"]
    assert malformed_seen >= 4  # arity and non-finite failures both covered

    rng = random.Random(3)
    for _ in range(1000):
        s = seq(
            [rng.uniform(0.0, 50.0) for _ in range(10)],
            [rng.uniform(-1.0, 1.0) for _ in range(10)],
        )
        parsed = parse_trajectory_text(format_trajectory_text(s), horizon=10)
        assert parsed.seq == s


@criterion("prompt single-controlled-change (50 random instructions x 4 stages)")
def test_prompt_single_controlled_change():
    template = (
        'The passenger says: "{instr}". Always prioritize the passenger\'s '
        "instruction unless it is unsafe; if complying is unsafe, briefly "
        "explain and choose the safest alternative."
    )
    words = ["turn", "left", "right", "stop", "merge", "lane", "after", "the",
             "bus", "crosswalk", "light", "slowly", "behind", "yellow", "car"]
    rng = random.Random(50)
    instructions = []
    for _ in range(50):
        n = rng.randint(1, 12)
        text = " ".join(rng.choice(words) for _ in range(n))
        if rng.random() < 0.3:
            text += rng.choice(["!", "?", ", please.", " (carefully)"])
        instructions.append(text)

    builders = [
        lambda c: prompting.build_scene_description_prompt(c),
        lambda c: prompting.build_object_identification_prompt(c),
        lambda c: prompting.build_intent_prompt(c),
        lambda c: prompting.build_trajectory_prompt(
            c, stage_outputs=("s", "o", "i"), ego_summary="e", horizon=10,
        ),
    ]
    for instruction in instructions:
        expected_block = "\n\n" + template.format(instr=instruction)
        for build in builders:
            baseline = build(prompting.Condition.baseline()).text
            instructed = build(prompting.Condition.instructed(instruction)).text
            assert instructed == baseline + expected_block
            assert instructed.count("Always prioritize the passenger's") == 1
