from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plansteer.dataset import EgoState
from plansteer.kinematics import (
    Frame,
    Pose,
    Trajectory,
    initial_pose_from_history,
    integrate,
    normalize_heading,
    to_global,
)
from plansteer.trajparse import SpeedCurvatureSequence

from helpers import chord_to_arc_length, euler_positions


def seq(speeds, curvatures) -> SpeedCurvatureSequence:
    return SpeedCurvatureSequence(tuple(speeds), tuple(curvatures))


def test_straight_line_exact():
    traj = integrate(seq([2.0] * 10, [0.0] * 10), dt=0.5)
    assert traj.frame is Frame.EGO
    assert traj.points == tuple((float(k), 0.0) for k in range(1, 11))


def test_circle_points_on_radius_ten_circle():
    traj = integrate(seq([1.0] * 10, [0.1] * 10), dt=0.5)
    for x, y in traj.points:
        assert abs(x * x + (y - 10.0) ** 2 - 100.0) < 1e-9


def test_zero_motion_stays_at_origin():
    traj = integrate(seq([0.0] * 10, [0.0] * 10), dt=0.5)
    assert traj.points == tuple((0.0, 0.0) for _ in range(10))


def test_integrate_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        integrate(seq([1.0], [0.0]), dt=0.0)


def test_to_global_identity_pose():
    traj = integrate(seq([3.0] * 10, [0.05] * 10), dt=0.5)
    moved = to_global(traj, Pose(0.0, 0.0, 0.0))
    assert moved.frame is Frame.GLOBAL
    assert moved.points == traj.points


def test_to_global_quarter_turn():
    traj = Trajectory(points=((1.0, 0.0),), frame=Frame.EGO)
    moved = to_global(traj, Pose(5.0, 5.0, math.pi / 2))
    x, y = moved.points[0]
    assert abs(x - 5.0) < 1e-12
    assert abs(y - 6.0) < 1e-12


def test_to_global_requires_ego_frame():
    traj = Trajectory(points=((1.0, 0.0),), frame=Frame.GLOBAL)
    with pytest.raises(ValueError):
        to_global(traj, Pose(0.0, 0.0, 0.0))


@given(
    x=st.floats(-1e4, 1e4),
    y=st.floats(-1e4, 1e4),
    heading=st.floats(-10.0, 10.0),
)
def test_to_global_preserves_pairwise_distances(x, y, heading):
    traj = integrate(seq([2.0, 1.0, 3.0], [0.1, -0.3, 0.0]), dt=0.5)
    moved = to_global(traj, Pose(x, y, heading))
    for (a, b) in ((0, 1), (0, 2), (1, 2)):
        before = math.dist(traj.points[a], traj.points[b])
        after = math.dist(moved.points[a], moved.points[b])
        assert abs(before - after) < 1e-6


def test_initial_pose_single_state():
    pose = initial_pose_from_history([EgoState(t=0.0, x=3.0, y=4.0, heading=0.2, speed=1.0)])
    assert (pose.x, pose.y, pose.heading) == (3.0, 4.0, 0.2)


def test_initial_pose_last_state_wins():
    history = [
        EgoState(t=0.0, x=0.0, y=0.0, heading=0.0, speed=1.0),
        EgoState(t=0.5, x=1.0, y=2.0, heading=-0.4, speed=2.0),
    ]
    pose = initial_pose_from_history(history)
    assert (pose.x, pose.y, pose.heading) == (1.0, 2.0, -0.4)


def test_initial_pose_empty_history_errors():
    with pytest.raises(ValueError):
        initial_pose_from_history([])


@given(st.floats(-100.0, 100.0))
def test_normalize_heading_range(theta):
    wrapped = normalize_heading(theta)
    assert -math.pi < wrapped <= math.pi
    # Same direction modulo 2*pi.
    assert abs(math.cos(wrapped) - math.cos(theta)) < 1e-9
    assert abs(math.sin(wrapped) - math.sin(theta)) < 1e-9


@given(
    speeds=st.lists(st.floats(0.0, 15.0), min_size=10, max_size=10),
    curvatures=st.lists(st.floats(-0.4, 0.4), min_size=10, max_size=10),
)
@settings(max_examples=200)
def test_arc_length_matches_speed_times_dt(speeds, curvatures):
    """Reconstruct each step's arc length from the emitted chords and the
    known curvature; the total must equal sum(v*dt).

    Curvature stays under 0.4 so every step turns less than pi and the
    chord-to-arc inversion is single-valued.
    """
    dt = 0.5
    traj = integrate(seq(speeds, curvatures), dt=dt)
    prev = (0.0, 0.0)
    total = 0.0
    for (x, y), kappa in zip(traj.points, curvatures):
        total += chord_to_arc_length(math.dist(prev, (x, y)), kappa)
        prev = (x, y)
    assert abs(total - sum(v * dt for v in speeds)) < 1e-6


def test_exact_arc_matches_euler_substepping():
    # v^2 * kappa stays under 0.02 so first-order Euler's accumulated error
    # (about T * v^2 * kappa * dt^2 / (2 * substeps)) has margin on 1e-4 m.
    rng = random.Random(42)
    for _ in range(50):
        speeds = [rng.uniform(0.0, 2.0) for _ in range(10)]
        curvatures = [rng.uniform(-0.005, 0.005) for _ in range(10)]
        exact = integrate(seq(speeds, curvatures), dt=0.5).points
        approx = euler_positions(speeds, curvatures, dt=0.5, substeps=1000)
        for (ex, ey), (ax, ay) in zip(exact, approx):
            assert math.dist((ex, ey), (ax, ay)) < 1e-4


def test_exact_arc_matches_midpoint_substepping_at_full_clamp_range():
    """Across the full clamped (v, kappa) range, a second-order midpoint
    sub-stepper agrees tightly, so the closed form is not just matching
    Euler's own bias at small curvature."""
    rng = random.Random(7)
    for _ in range(25):
        speeds = [rng.uniform(0.0, 15.0) for _ in range(10)]
        curvatures = [rng.uniform(-1.0, 1.0) for _ in range(10)]
        exact = integrate(seq(speeds, curvatures), dt=0.5).points
        x = y = theta = 0.0
        substeps = 2000
        h = 0.5 / substeps
        for (ex, ey), v, k in zip(exact, speeds, curvatures):
            for _ in range(substeps):
                mid = theta + v * k * h / 2.0
                x += v * h * math.cos(mid)
                y += v * h * math.sin(mid)
                theta += v * k * h
            assert math.dist((ex, ey), (x, y)) < 1e-5


def test_nonfinite_sequence_is_rejected_upstream():
    with pytest.raises(ValueError):
        SpeedCurvatureSequence((float("nan"),), (0.0,))


def test_trajectory_rejects_nonfinite_points():
    with pytest.raises(ValueError):
        Trajectory(points=((float("inf"), 0.0),), frame=Frame.EGO)
