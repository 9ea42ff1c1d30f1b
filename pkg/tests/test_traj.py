import math

import numpy as np
import pytest

from anchorplan.core import (
    Pose2D,
    Trajectory,
    ade,
    ade_many,
    flatten,
    kinematics,
    normalize_angle,
    recompute_headings,
    to_global,
    to_local,
    unflatten,
)
from anchorplan.errors import HorizonMismatchError, ShapeError


class TestAngles:
    @pytest.mark.parametrize(
        ("angle", "expected"),
        [
            (0.0, 0.0),
            (math.pi, math.pi),
            (-math.pi, math.pi),
            (3 * math.pi, math.pi),
            (2 * math.pi + 0.25, 0.25),
            (-0.5, -0.5),
        ],
    )
    def test_normalize(self, angle: float, expected: float) -> None:
        assert normalize_angle(angle) == pytest.approx(expected, abs=1e-12)

    def test_in_range_is_identity(self) -> None:
        for a in np.linspace(-math.pi + 1e-9, math.pi, 37):
            assert normalize_angle(float(a)) == float(a)

    def test_pose_rejects_non_finite(self) -> None:
        with pytest.raises(ValueError):
            Pose2D(float("nan"), 0.0)
        with pytest.raises(ValueError):
            Pose2D(0.0, 0.0, float("inf"))


class TestTrajectory:
    def test_headings_follow_segments(self) -> None:
        t = Trajectory.from_xy([[1, 0], [2, 0], [2, 1], [2, 1]], initial_heading=0.3)
        assert t.headings.tolist() == pytest.approx([0.0, math.pi / 2, math.pi / 2, math.pi / 2])

    def test_quarter_circle_headings(self) -> None:
        """Each chord of a counter-clockwise arc points along the tangent at its midpoint."""
        radius = 12.0
        theta = np.linspace(0.0, math.pi / 2.0, 9)
        arc = Trajectory.from_xy(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
        mid = (theta[:-1] + theta[1:]) / 2.0 + math.pi / 2.0
        expected = [*mid, mid[-1]]
        got = recompute_headings(arc, initial_heading=-1.0).headings
        assert got == pytest.approx(expected, abs=1e-9)

    def test_zero_segment_inherits_initial_heading(self) -> None:
        t = Trajectory.from_xy([[0, 0], [0, 0]], initial_heading=1.0)
        assert t.headings.tolist() == pytest.approx([1.0, 1.0])

    def test_times(self) -> None:
        t = Trajectory.from_xy(np.zeros((8, 2)), dt=0.5)
        assert t.times.tolist() == [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]

    def test_flatten_roundtrip(self) -> None:
        rng = np.random.default_rng(0)
        xy = rng.normal(size=(8, 2))
        t = recompute_headings(Trajectory.from_xy(xy))
        assert np.array_equal(unflatten(flatten(t)).xy, t.xy)
        assert flatten(t).shape == (16,)

    def test_shape_errors(self) -> None:
        with pytest.raises(ShapeError):
            unflatten(np.zeros(5))
        with pytest.raises(ShapeError):
            Trajectory.from_xy(np.zeros((4, 3)))
        with pytest.raises(ShapeError):
            Trajectory(())

    def test_frames_are_inverse(self) -> None:
        origin = Pose2D(10.0, -4.0, 0.7)
        t = Trajectory.from_xy([[11, -4], [13, -3], [15, -1], [18, 1]])
        local = to_local(t, origin)
        back = to_global(local, origin, t.dt)
        assert np.allclose(back.xy, t.xy, atol=1e-12)

    def test_local_frame_axes(self) -> None:
        """A point ahead of a pose facing +y lands on the local +x axis."""
        origin = Pose2D(1.0, 1.0, math.pi / 2)
        local = to_local(Trajectory.from_xy([[1.0, 4.0]]), origin)
        assert local.tolist() == pytest.approx([3.0, 0.0], abs=1e-12)


class TestAde:
    def test_identity_and_symmetry(self) -> None:
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=16), rng.normal(size=16)
        assert ade(a, a) == 0.0
        assert ade(a, b) == pytest.approx(ade(b, a))

    def test_known_value(self) -> None:
        a = np.zeros(4)
        b = np.array([3.0, 4.0, 0.0, 1.0])
        assert ade(a, b) == pytest.approx(3.0)

    def test_uniform_shift(self) -> None:
        a = np.random.default_rng(3).normal(size=16)
        b = a + np.tile([3.0, 4.0], 8)
        assert ade(a, b) == pytest.approx(5.0, abs=1e-12)

    def test_triangle_inequality(self) -> None:
        rng = np.random.default_rng(4)
        for _ in range(200):
            a, b, c = rng.normal(size=(3, 16)) * rng.uniform(0.1, 10.0)
            assert ade(a, b) >= 0.0
            assert ade(a, c) <= ade(a, b) + ade(b, c) + 1e-12

    def test_many_matches_single(self) -> None:
        rng = np.random.default_rng(2)
        cands, target = rng.normal(size=(5, 16)), rng.normal(size=16)
        assert ade_many(cands, target) == pytest.approx([ade(c, target) for c in cands])

    def test_horizon_mismatch(self) -> None:
        with pytest.raises(HorizonMismatchError):
            ade(np.zeros(16), np.zeros(14))
        with pytest.raises(HorizonMismatchError):
            ade_many(np.zeros((3, 16)), np.zeros(12))


def test_kinematics_constant_speed() -> None:
    t = Trajectory.from_xy([[5.0 * (i + 1) * 0.5, 0.0] for i in range(8)], dt=0.5)
    k = kinematics(t, Pose2D(0.0, 0.0))
    assert k.speed == pytest.approx(np.full(8, 5.0))
    assert k.accel == pytest.approx(np.zeros(7), abs=1e-12)
    assert k.jerk == pytest.approx(np.zeros(6), abs=1e-12)
