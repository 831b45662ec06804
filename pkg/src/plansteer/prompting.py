"""Prompt assembly for the four-call planning chain.

Three chain-of-thought stages (scene description, object identification,
intent estimation) followed by the trajectory request. A passenger
instruction, when present, is appended to the stage prompt as one fixed
sentence pair; everything before it stays byte-identical to the baseline
prompt so the instruction is the single controlled change.

Template text lives in templates/*.txt and is substituted with literal
string replacement (not str.format), so instruction text containing
braces or percent signs can never corrupt a prompt.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class Stage(Enum):
    SCENE_DESCRIPTION = "scene_description"
    OBJECT_IDENTIFICATION = "object_identification"
    INTENT_ESTIMATION = "intent_estimation"
    TRAJECTORY_REQUEST = "trajectory_request"


class ConditionKind(Enum):
    BASELINE = "baseline"
    INSTRUCTED = "instructed"


class PromptError(Exception):
    pass


def _load_template(name: str) -> str:
    return resources.files("plansteer.templates").joinpath(name).read_text(encoding="utf-8")


TEMPLATE_VERSION = _load_template("VERSION.txt").strip()

_SCENE = _load_template("scene_description.txt")
_OBJECTS = _load_template("object_identification.txt")
_INTENT = _load_template("intent.txt")
_INTENT_UPDATE = _load_template("intent_update.txt")
_TRAJECTORY = _load_template("trajectory.txt")
_INJECTION = _load_template("injection.txt")


@dataclass(frozen=True)
class Condition:
    kind: ConditionKind
    instruction: str | None = None

    def __post_init__(self) -> None:
        if self.kind is ConditionKind.BASELINE and self.instruction is not None:
            raise PromptError("baseline condition carries no instruction text")
        if self.kind is ConditionKind.INSTRUCTED:
            if self.instruction is None or not self.instruction.strip():
                raise PromptError("instructed condition requires a non-empty instruction")

    @staticmethod
    def baseline() -> "Condition":
        return Condition(kind=ConditionKind.BASELINE)

    @staticmethod
    def instructed(instruction: str) -> "Condition":
        return Condition(kind=ConditionKind.INSTRUCTED, instruction=instruction)


@dataclass(frozen=True)
class PromptStage:
    stage: Stage
    text: str
    image_count: int

    def __post_init__(self) -> None:
        if not self.text:
            raise PromptError("prompt text must be non-empty")
        if self.stage in (Stage.SCENE_DESCRIPTION, Stage.OBJECT_IDENTIFICATION):
            if self.image_count < 1:
                raise PromptError(f"{self.stage.value} prompt requires at least one image")


_PLACEHOLDER = re.compile(
    r"<(instruction|prior_intent|scene_description|object_identification"
    r"|driving_intent|ego_summary|dt|horizon)>"
)


def _render(template: str, mapping: dict[str, str]) -> str:
    # Single pass: substituted content is never rescanned, so model text
    # that happens to contain a placeholder token cannot be re-expanded.
    return _PLACEHOLDER.sub(lambda m: mapping.get(m.group(1), m.group(0)), template)


def injection_block(instruction: str) -> str:
    """The appended passenger-directive block, including its separator."""
    return "\n\n" + _render(_INJECTION, {"instruction": instruction})


def _apply_condition(base_text: str, condition: Condition) -> str:
    if condition.kind is ConditionKind.BASELINE:
        return base_text
    return base_text + injection_block(condition.instruction)


def build_scene_description_prompt(condition: Condition, image_count: int = 1) -> PromptStage:
    return PromptStage(
        stage=Stage.SCENE_DESCRIPTION,
        text=_apply_condition(_SCENE, condition),
        image_count=image_count,
    )


def build_object_identification_prompt(condition: Condition, image_count: int = 1) -> PromptStage:
    return PromptStage(
        stage=Stage.OBJECT_IDENTIFICATION,
        text=_apply_condition(_OBJECTS, condition),
        image_count=image_count,
    )


def build_intent_prompt(
    condition: Condition, prior_intent: str | None = None, image_count: int = 1
) -> PromptStage:
    if prior_intent is None:
        base = _INTENT
    else:
        base = _render(_INTENT_UPDATE, {"prior_intent": prior_intent})
    return PromptStage(
        stage=Stage.INTENT_ESTIMATION,
        text=_apply_condition(base, condition),
        image_count=image_count,
    )


def build_trajectory_prompt(
    condition: Condition,
    stage_outputs: tuple[str, str, str],
    ego_summary: str,
    horizon: int = 10,
    dt: float = 0.5,
    image_count: int = 0,
) -> PromptStage:
    scene_text, objects_text, intent_text = stage_outputs
    for label, value in (
        ("scene description", scene_text),
        ("object identification", objects_text),
        ("driving intent", intent_text),
    ):
        if not value or not value.strip():
            raise PromptError(f"missing stage output: {label}")
    base = _render(_TRAJECTORY, {
        "scene_description": scene_text,
        "object_identification": objects_text,
        "driving_intent": intent_text,
        "ego_summary": ego_summary,
        "dt": _trim_float(dt),
        "horizon": str(horizon),
    })
    return PromptStage(
        stage=Stage.TRAJECTORY_REQUEST,
        text=_apply_condition(base, condition),
        image_count=image_count,
    )


def _trim_float(value: float) -> str:
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return text if text else "0"


def build_ego_summary(history) -> str:
    """Textual ego-state summary embedded in the trajectory prompt.

    Format: current speed and heading from the last observed state, plus
    the straight-line displacement covered over the observation window.
    """
    if not history:
        raise PromptError("ego history is empty")
    last = history[-1]
    first = history[0]
    displacement = math.hypot(last.x - first.x, last.y - first.y)
    window = last.t - first.t
    return (
        f"Current speed {last.speed:.2f} m/s, heading {last.heading:.3f} rad. "
        f"Moved {displacement:.2f} m over the last {window:.1f} s."
    )
