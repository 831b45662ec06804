"""Extract structured plans from free-form model text.

The trajectory stage must yield exactly T (speed, curvature) pairs. Model
output is free text, so extraction runs in three tiers of decreasing
strictness; the tier that matched is reported so downstream analysis can
separate format failures from planning failures.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

DEFAULT_HORIZON = 10
MAX_CURVATURE = 1.0  # 1/m, tighter than any road turn
INTENT_MAX_CHARS = 500

# Matches plain/scientific floats plus nan/inf tokens so that non-finite
# values are detected as such instead of silently breaking a list match.
_NUMBER = re.compile(
    r"[-+]?(?:\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|nan|inf(?:inity)?)",
    re.IGNORECASE,
)
_BRACKETED = re.compile(r"\[([^\[\]]*)\]")
_SPEEDS_LABEL = re.compile(r"speeds?\s*[:=]\s*(\[[^\[\]]*\])", re.IGNORECASE)
_CURVATURES_LABEL = re.compile(r"curvatures?\s*[:=]\s*(\[[^\[\]]*\])", re.IGNORECASE)


class ParseError(Exception):
    """Base class for trajectory/intent extraction failures."""


class NoTrajectoryFound(ParseError):
    pass


class WrongArity(ParseError):
    pass


class NonFinite(ParseError):
    pass


class EmptyResponse(ParseError):
    pass


@dataclass(frozen=True)
class SpeedCurvatureSequence:
    speeds: tuple[float, ...]
    curvatures: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.speeds) != len(self.curvatures):
            raise ValueError(
                f"speeds/curvatures length mismatch: {len(self.speeds)} vs {len(self.curvatures)}"
            )
        for v in self.speeds:
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"invalid speed {v}")
        for k in self.curvatures:
            if not math.isfinite(k) or abs(k) > MAX_CURVATURE:
                raise ValueError(f"invalid curvature {k}")

    @property
    def horizon(self) -> int:
        return len(self.speeds)


@dataclass(frozen=True)
class TrajectoryParse:
    """A parsed sequence plus provenance for run logs."""

    seq: SpeedCurvatureSequence
    tier: int  # 1 strict, 2 lenient, 3 fallback
    clamp_count: int = 0


def format_trajectory_text(seq: SpeedCurvatureSequence) -> str:
    """Render a sequence in the strict two-line format the prompt mandates."""
    speeds = ", ".join(repr(v) for v in seq.speeds)
    curvatures = ", ".join(repr(k) for k in seq.curvatures)
    return f"Speeds: [{speeds}]\nCurvatures: [{curvatures}]"


def _numbers(text: str) -> list[float]:
    return [float(tok) for tok in _NUMBER.findall(text)]


def _clamp(speeds: list[float], curvatures: list[float]) -> tuple[SpeedCurvatureSequence, int]:
    for v in speeds + curvatures:
        if not math.isfinite(v):
            raise NonFinite(f"non-finite value {v} in trajectory output")
    clamps = 0
    clamped_speeds = []
    for v in speeds:
        if v < 0.0:
            clamps += 1
            v = 0.0
        clamped_speeds.append(v)
    clamped_curvatures = []
    for k in curvatures:
        if abs(k) > MAX_CURVATURE:
            clamps += 1
            k = math.copysign(MAX_CURVATURE, k)
        clamped_curvatures.append(k)
    return (
        SpeedCurvatureSequence(tuple(clamped_speeds), tuple(clamped_curvatures)),
        clamps,
    )


def _labeled_lists(pattern: re.Pattern, text: str) -> list[list[float]]:
    return [_numbers(m.group(1)) for m in pattern.finditer(text)]


def _tier1(text: str, horizon: int) -> tuple[list[float], list[float]] | None:
    """Labeled lists. Models sometimes echo the requested format line
    (`Speeds: [s1, ...]`) before answering, so every labeled occurrence is
    considered and the first one at the right arity wins per label."""
    speed_lists = _labeled_lists(_SPEEDS_LABEL, text)
    curvature_lists = _labeled_lists(_CURVATURES_LABEL, text)
    if not speed_lists or not curvature_lists:
        return None
    speeds = next((xs for xs in speed_lists if len(xs) == horizon), None)
    curvatures = next((xs for xs in curvature_lists if len(xs) == horizon), None)
    if speeds is None or curvatures is None:
        lengths = [len(xs) for xs in speed_lists] + [len(xs) for xs in curvature_lists]
        raise WrongArity(
            f"labeled lists have lengths {lengths}, expected {horizon}"
        )
    return speeds, curvatures


def _tier2(text: str, horizon: int) -> tuple[list[float], list[float]] | None:
    matches = []
    for m in _BRACKETED.finditer(text):
        values = _numbers(m.group(1))
        if len(values) == horizon:
            matches.append(values)
        if len(matches) == 2:
            return matches[0], matches[1]
    return None


def _tier3(text: str, horizon: int) -> tuple[list[float], list[float]] | None:
    lower = text.lower()
    out: list[list[float]] = []
    for word in ("speed", "curvature"):
        idx = lower.find(word)
        if idx < 0:
            return None
        values = _numbers(text[idx + len(word):])
        if len(values) < horizon:
            return None
        out.append(values[:horizon])
    return out[0], out[1]


def parse_trajectory_text(text: str, horizon: int = DEFAULT_HORIZON) -> TrajectoryParse:
    """Extract T (speed, curvature) pairs from model text.

    Tier 1: labeled bracketed lists (`Speeds: [...]` / `Curvatures: [...]`).
    Tier 2: the first two bracketed numeric lists of length T anywhere.
    Tier 3: 2*T numeric tokens following "speed" and "curvature".

    Raises WrongArity when labeled lists exist at the wrong length,
    NonFinite on nan/inf tokens, NoTrajectoryFound when no tier matches.
    Negative speeds clamp to 0 and |curvature| clamps to MAX_CURVATURE;
    clamps are counted on the result, never silent.
    """
    pair = _tier1(text, horizon)
    if pair is not None:
        seq, clamps = _clamp(list(pair[0]), list(pair[1]))
        return TrajectoryParse(seq=seq, tier=1, clamp_count=clamps)

    pair = _tier2(text, horizon)
    if pair is not None:
        seq, clamps = _clamp(list(pair[0]), list(pair[1]))
        return TrajectoryParse(seq=seq, tier=2, clamp_count=clamps)

    pair = _tier3(text, horizon)
    if pair is not None:
        seq, clamps = _clamp(list(pair[0]), list(pair[1]))
        return TrajectoryParse(seq=seq, tier=3, clamp_count=clamps)

    # Bracketed numeric lists were present but none at the right arity.
    wrong_arity = [
        len(_numbers(m.group(1)))
        for m in _BRACKETED.finditer(text)
        if _numbers(m.group(1))
    ]
    if wrong_arity:
        raise WrongArity(f"numeric lists of lengths {wrong_arity} found, expected {horizon}")
    raise NoTrajectoryFound("no speed-curvature lists found in model output")


def parse_intent_text(text: str) -> str:
    """Normalize an intent answer for re-embedding into later prompts."""
    collapsed = " ".join(text.split())
    if not collapsed:
        raise EmptyResponse("intent response was empty")
    return collapsed[:INTENT_MAX_CHARS]
