from dataclasses import dataclass, replace
from enum import StrEnum
from functools import cached_property

import numpy as np
import shapely
from pydantic import BaseModel, ConfigDict, Field
from shapely.geometry import LineString, Polygon

from anchorplan.core.traj import DEFAULT_DT, DEFAULT_HORIZON, Pose2D, Trajectory
from anchorplan.typ import FloatArray


class EgoShape(BaseModel):
    """Ego footprint in metres."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    length: float = Field(4.6, gt=0)
    width: float = Field(1.9, gt=0)


class WorldConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    horizon: int = Field(DEFAULT_HORIZON, ge=1)
    dt: float = Field(DEFAULT_DT, gt=0)
    # perception raster
    grid: int = Field(32, ge=4)
    extent: float = Field(64.0, gt=0)
    supersample: int = Field(4, ge=1)
    map_points: int = Field(8, ge=2)
    lane_sigma: float = Field(1.0, gt=0)
    stop_line_band: float = Field(0.5, gt=0)
    # ego and roads
    ego: EgoShape = EgoShape()
    lane_width: float = Field(3.5, gt=0)
    # expert driver
    sim_substeps: int = Field(10, ge=1)
    lookahead_min: float = Field(4.0, gt=0)
    lookahead_gain: float = Field(0.6, ge=0)
    idm_accel: float = Field(1.5, gt=0)
    idm_decel: float = Field(2.0, gt=0)
    idm_headway: float = Field(1.0, ge=0)
    brake_limit: float = Field(3.5, gt=0)
    standstill_gap: float = Field(2.0, gt=0)
    # bounds the expert must respect; mirror the default rule thresholds
    max_accel: float = 4.0
    max_jerk: float = 8.0
    max_lateral: float = 0.75
    min_ttc: float = 1.0
    max_retries: int = Field(20, ge=1)


class Template(StrEnum):
    STRAIGHT_CRUISE = "StraightCruise"
    LEAD_VEHICLE = "LeadVehicle"
    LEFT_TURN = "LeftTurn"
    RIGHT_TURN = "RightTurn"
    RED_LIGHT = "RedLight"
    LANE_BLOCKED_SWERVE = "LaneBlockedSwerve"


class Command(StrEnum):
    # declaration order is the one-hot order
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    GO_STRAIGHT = "GoStraight"
    STOP = "Stop"

    @property
    def index(self) -> int:
        return list(Command).index(self)

    def one_hot(self) -> FloatArray:
        v = np.zeros(len(Command), dtype=np.float64)
        v[self.index] = 1.0
        return v


class LightState(StrEnum):
    RED = "Red"
    GREEN = "Green"


def _frozen(a: FloatArray | list[list[float]]) -> FloatArray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LaneElement:
    id: int
    centerline: FloatArray
    left_boundary: FloatArray
    right_boundary: FloatArray
    width: float
    successors: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for name in ("centerline", "left_boundary", "right_boundary"):
            arr = _frozen(getattr(self, name))
            if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
                raise ValueError(f"lane {self.id}: {name} must be an (n>=2, 2) polyline")
            object.__setattr__(self, name, arr)
        steps = np.linalg.norm(np.diff(self.centerline, axis=0), axis=1)
        if not np.all(steps > 0):
            raise ValueError(f"lane {self.id}: centerline arclength must increase")
        object.__setattr__(self, "successors", tuple(self.successors))

    @cached_property
    def line(self) -> LineString:
        return LineString(self.centerline)


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    extent: tuple[float, float]  # length, width
    heading: float = 0.0
    velocity: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not (self.extent[0] > 0 and self.extent[1] > 0):
            raise ValueError(f"obstacle extent must be positive, got {self.extent}")
        values = (*self.center, *self.extent, self.heading, *self.velocity)
        if not np.all(np.isfinite(values)):
            raise ValueError("obstacle fields must be finite")

    def center_at(self, time: float) -> tuple[float, float]:
        """Constant-velocity propagation."""
        return (
            self.center[0] + self.velocity[0] * time,
            self.center[1] + self.velocity[1] * time,
        )


@dataclass(frozen=True)
class TrafficLightState:
    stop_line: tuple[tuple[float, float], tuple[float, float]]
    state: LightState
    lane_id: int


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    template: Template
    lanes: tuple[LaneElement, ...]
    drivable_area: FloatArray  # simple polygon, (n, 2)
    obstacles: tuple[Obstacle, ...]
    traffic_light: TrafficLightState | None
    command: Command
    ego_start: Pose2D
    ego_speed: float
    route: tuple[int, ...]
    expert: Trajectory
    rng_seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "drivable_area", _frozen(self.drivable_area))
        object.__setattr__(self, "lanes", tuple(self.lanes))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "route", tuple(self.route))
        ids = {lane.id for lane in self.lanes}
        if missing := [r for r in self.route if r not in ids]:
            raise ValueError(f"route references unknown lanes {missing}")

    @cached_property
    def polygon(self) -> Polygon:
        poly = Polygon(self.drivable_area)
        shapely.prepare(poly)
        return poly

    @cached_property
    def lane_by_id(self) -> dict[int, LaneElement]:
        return {lane.id: lane for lane in self.lanes}

    @cached_property
    def route_line(self) -> LineString:
        """Route lane centerlines joined end to end, junction duplicates dropped."""
        pts: list[FloatArray] = []
        for lane_id in self.route:
            c = self.lane_by_id[lane_id].centerline
            if pts and np.allclose(pts[-1][-1], c[0]):
                c = c[1:]
            pts.append(c)
        return LineString(np.vstack(pts))

    @property
    def horizon(self) -> int:
        return self.expert.horizon

    @property
    def dt(self) -> float:
        return self.expert.dt

    def translated(self, dx: float, dy: float) -> "Scenario":
        """The same scene rigidly shifted by (dx, dy)."""
        shift = np.array([dx, dy])
        lanes = tuple(
            replace(
                lane,
                centerline=lane.centerline + shift,
                left_boundary=lane.left_boundary + shift,
                right_boundary=lane.right_boundary + shift,
            )
            for lane in self.lanes
        )
        obstacles = tuple(
            replace(o, center=(o.center[0] + dx, o.center[1] + dy))
            for o in self.obstacles
        )
        light = self.traffic_light
        if light is not None:
            (a, b) = light.stop_line
            light = replace(
                light,
                stop_line=((a[0] + dx, a[1] + dy), (b[0] + dx, b[1] + dy)),
            )
        s = self.ego_start
        return replace(
            self,
            lanes=lanes,
            drivable_area=self.drivable_area + shift,
            obstacles=obstacles,
            traffic_light=light,
            ego_start=Pose2D(s.x + dx, s.y + dy, s.heading),
            expert=Trajectory.from_xy(
                self.expert.xy + shift, self.expert.dt, s.heading
            ),
        )


@dataclass(frozen=True, eq=False)
class PerceptionBundle:
    bev: FloatArray  # (C, G, G): drivable, lane-center proximity, occupancy, stop line
    object_tokens: FloatArray  # (n_objects, 8)
    map_tokens: FloatArray  # (n_lanes, 2 * map_points)
    command_token: FloatArray  # (4,)

    def __post_init__(self) -> None:
        for name in ("bev", "object_tokens", "map_tokens", "command_token"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
