"""Unicycle integration of speed-curvature sequences into waypoints.

Convention: heading 0 points along the ego forward axis (+x), positive
curvature turns left (right-handed frame). Each step applies the speed and
curvature as constants over dt, so the step traces an exact circular arc
(or a straight segment when curvature is ~0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .trajparse import SpeedCurvatureSequence

STRAIGHT_CURVATURE_EPS = 1e-9


class Frame(Enum):
    EGO = "ego"
    GLOBAL = "global"


def normalize_heading(theta: float) -> float:
    """Wrap an angle into (-pi, pi]; values already in range pass through
    untouched so normalization never perturbs them."""
    if -math.pi < theta <= math.pi:
        return theta
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "heading", normalize_heading(self.heading))


@dataclass(frozen=True)
class Trajectory:
    points: tuple[tuple[float, float], ...]
    frame: Frame

    def __post_init__(self) -> None:
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"non-finite trajectory point ({x}, {y})")


class IntegrationError(Exception):
    """Non-finite state encountered mid-integration (defensive; parser clamps should prevent it)."""


def integrate(seq: SpeedCurvatureSequence, dt: float) -> Trajectory:
    """Integrate per-step (speed, curvature) pairs from the origin pose.

    Starts at (0, 0) with heading 0 and emits one waypoint per step
    (the start pose itself is not emitted). Each step is an exact
    constant-speed, constant-curvature arc of length v*dt.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x, y, theta = 0.0, 0.0, 0.0
    points: list[tuple[float, float]] = []
    for v, kappa in zip(seq.speeds, seq.curvatures):
        if abs(kappa) < STRAIGHT_CURVATURE_EPS:
            x += v * dt * math.cos(theta)
            y += v * dt * math.sin(theta)
        else:
            dtheta = v * kappa * dt
            x += (math.sin(theta + dtheta) - math.sin(theta)) / kappa
            y -= (math.cos(theta + dtheta) - math.cos(theta)) / kappa
            theta += dtheta
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(theta)):
            raise IntegrationError(
                f"non-finite state after step v={v}, kappa={kappa}: ({x}, {y}, {theta})"
            )
        points.append((x, y))
    return Trajectory(points=tuple(points), frame=Frame.EGO)


def to_global(traj: Trajectory, start: Pose) -> Trajectory:
    """Rigidly transform an ego-frame trajectory into the global frame."""
    if traj.frame is not Frame.EGO:
        raise ValueError("to_global expects an ego-frame trajectory")
    c, s = math.cos(start.heading), math.sin(start.heading)
    points = tuple(
        (start.x + c * px - s * py, start.y + s * px + c * py) for px, py in traj.points
    )
    return Trajectory(points=points, frame=Frame.GLOBAL)


def initial_pose_from_history(history) -> Pose:
    """Anchor pose for integration: the last observed ego state."""
    if not history:
        raise ValueError("ego history is empty")
    last = history[-1]
    return Pose(x=last.x, y=last.y, heading=last.heading)
