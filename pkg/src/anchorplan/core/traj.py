import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from anchorplan.errors import HorizonMismatchError, ShapeError
from anchorplan.typ import FlatTrajectory, FloatArray

DEFAULT_HORIZON = 8
DEFAULT_DT = 0.5

_TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Map an angle into (-pi, pi]; values already in range are returned untouched."""
    if -math.pi < angle <= math.pi:
        return float(angle)
    r = math.fmod(angle + math.pi, _TWO_PI)
    if r <= 0.0:
        r += _TWO_PI
    return r - math.pi


@dataclass(frozen=True, slots=True)
class Pose2D:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y})")
        if not math.isfinite(self.heading):
            raise ValueError("non-finite heading")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True, slots=True)
class Trajectory:
    waypoints: tuple[Pose2D, ...]
    dt: float = DEFAULT_DT
    _xy: FloatArray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise ShapeError("trajectory needs at least one waypoint")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        xy = np.array([(p.x, p.y) for p in self.waypoints], dtype=np.float64)
        xy.setflags(write=False)
        object.__setattr__(self, "_xy", xy)

    @property
    def horizon(self) -> int:
        return len(self.waypoints)

    @property
    def xy(self) -> FloatArray:
        """(H, 2) read-only view of the waypoint positions."""
        return self._xy

    @property
    def headings(self) -> FloatArray:
        return np.array([p.heading for p in self.waypoints], dtype=np.float64)

    @property
    def times(self) -> FloatArray:
        """Waypoint i is reached at (i + 1) * dt; the start pose sits at time 0."""
        return self.dt * np.arange(1, self.horizon + 1, dtype=np.float64)

    @classmethod
    def from_xy(
        cls, xy: FloatArray | Sequence[Sequence[float]], dt: float = DEFAULT_DT,
        initial_heading: float = 0.0,
    ) -> "Trajectory":
        pts = np.asarray(xy, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ShapeError(f"expected (H, 2) positions, got {pts.shape}")
        headings = _segment_headings(pts, initial_heading)
        return cls(
            tuple(
                Pose2D(float(x), float(y), h)
                for (x, y), h in zip(pts, headings, strict=True)
            ),
            dt,
        )


def _segment_headings(xy: FloatArray, initial_heading: float) -> list[float]:
    n = len(xy)
    headings: list[float] = []
    prev = normalize_angle(initial_heading)
    for i in range(n - 1):
        dx, dy = xy[i + 1] - xy[i]
        if dx != 0.0 or dy != 0.0:
            prev = math.atan2(dy, dx)
        headings.append(prev)
    headings.append(prev)
    return headings


def recompute_headings(t: Trajectory, initial_heading: float = 0.0) -> Trajectory:
    """heading_i follows the segment leaving waypoint i.

    The last waypoint copies the previous heading and zero-length segments inherit
    the prior heading (``initial_heading`` for the first waypoint).
    """
    return Trajectory.from_xy(t.xy, t.dt, initial_heading)


def flatten(t: Trajectory) -> FlatTrajectory:
    return t.xy.reshape(-1).copy()


def unflatten(
    values: FlatTrajectory, dt: float = DEFAULT_DT, initial_heading: float = 0.0
) -> Trajectory:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size % 2:
        raise ShapeError(f"flat trajectory needs an even-length vector, got {v.shape}")
    return Trajectory.from_xy(v.reshape(-1, 2), dt, initial_heading)


def to_local(t: Trajectory, origin: Pose2D) -> FlatTrajectory:
    """Flattened waypoints expressed in the frame of ``origin`` (x forward, y left)."""
    c, s = math.cos(origin.heading), math.sin(origin.heading)
    d = t.xy - np.array([origin.x, origin.y])
    local = np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1]])
    return local.reshape(-1)


def to_global(values: FlatTrajectory, origin: Pose2D, dt: float = DEFAULT_DT) -> Trajectory:
    """Inverse of ``to_local``; headings are recomputed in the world frame."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size % 2:
        raise ShapeError(f"flat trajectory needs an even-length vector, got {v.shape}")
    p = v.reshape(-1, 2)
    c, s = math.cos(origin.heading), math.sin(origin.heading)
    world = np.column_stack(
        [origin.x + c * p[:, 0] - s * p[:, 1], origin.y + s * p[:, 0] + c * p[:, 1]]
    )
    return Trajectory.from_xy(world, dt, origin.heading)


def _as_xy(t: Trajectory | FlatTrajectory) -> FloatArray:
    if isinstance(t, Trajectory):
        return t.xy
    v = np.asarray(t, dtype=np.float64)
    return v.reshape(-1, 2)


def ade(a: Trajectory | FlatTrajectory, b: Trajectory | FlatTrajectory) -> float:
    """Average displacement error: mean Euclidean distance of matching waypoints."""
    pa, pb = _as_xy(a), _as_xy(b)
    if pa.shape != pb.shape:
        raise HorizonMismatchError(f"horizons differ: {len(pa)} vs {len(pb)}")
    return float(np.mean(np.hypot(pa[:, 0] - pb[:, 0], pa[:, 1] - pb[:, 1])))


def ade_many(candidates: FloatArray, target: FlatTrajectory) -> FloatArray:
    """ade of every row of a (K, 2H) matrix against one flat target."""
    c = np.asarray(candidates, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if c.shape[1] != tgt.size:
        raise HorizonMismatchError(f"horizons differ: {c.shape[1]} vs {tgt.size}")
    d = (c - tgt).reshape(len(c), -1, 2)
    return np.mean(np.hypot(d[..., 0], d[..., 1]), axis=1)


class Kinematics(NamedTuple):
    speed: FloatArray  # H
    accel: FloatArray  # H - 1, vector magnitude
    jerk: FloatArray  # H - 2, vector magnitude


def kinematics(t: Trajectory, start: Pose2D) -> Kinematics:
    """Finite-difference speed, acceleration and jerk with the start pose prepended."""
    pts = np.vstack([[start.x, start.y], t.xy])
    vel = np.diff(pts, axis=0) / t.dt
    acc = np.diff(vel, axis=0) / t.dt
    jerk = np.diff(acc, axis=0) / t.dt
    return Kinematics(
        np.linalg.norm(vel, axis=1),
        np.linalg.norm(acc, axis=1),
        np.linalg.norm(jerk, axis=1),
    )
