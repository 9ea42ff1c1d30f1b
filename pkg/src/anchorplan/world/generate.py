import logging
import math
from collections.abc import Callable
from dataclasses import replace

import numpy as np

from anchorplan.core.traj import Pose2D, Trajectory
from anchorplan.errors import ScenarioInfeasibleError
from anchorplan.typ import FloatArray

from .expert import check_expert, expert_plan
from .models import (
    Command,
    LaneElement,
    LightState,
    Obstacle,
    Scenario,
    Template,
    TrafficLightState,
    WorldConfig,
)

logger = logging.getLogger("anchorplan")

# scenes are laid out in the ego start frame: ego at the origin facing +x, right-hand traffic
ROAD_START = -30.0
ROAD_END = 90.0
_CAR = (4.6, 1.9)

COMMANDS: dict[Template, Command] = {
    Template.STRAIGHT_CRUISE: Command.GO_STRAIGHT,
    Template.LEAD_VEHICLE: Command.GO_STRAIGHT,
    Template.LEFT_TURN: Command.TURN_LEFT,
    Template.RIGHT_TURN: Command.TURN_RIGHT,
    Template.RED_LIGHT: Command.STOP,
    Template.LANE_BLOCKED_SWERVE: Command.GO_STRAIGHT,
}


def polyline_normals(line: FloatArray) -> FloatArray:
    """Unit left normals from central differences (one-sided at the ends)."""
    tangents = np.gradient(line, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
    return np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)


def make_lane(
    lane_id: int, centerline: FloatArray, width: float, successors: tuple[int, ...] = ()
) -> LaneElement:
    n = polyline_normals(centerline) * (width / 2.0)
    return LaneElement(
        lane_id, centerline, centerline + n, centerline - n, width, successors
    )


def _straight(x0: float, x1: float, y: float, step: float = 2.0) -> FloatArray:
    count = max(2, int(math.ceil(abs(x1 - x0) / step)) + 1)
    return np.column_stack([np.linspace(x0, x1, count), np.full(count, y)])


class _Layout:
    """Mutable scratch space for one template draw."""

    def __init__(self) -> None:
        self.lanes: list[LaneElement] = []
        self.polygon: list[tuple[float, float]] = []
        self.obstacles: list[Obstacle] = []
        self.light: TrafficLightState | None = None
        self.route: list[int] = [0]
        self.speed = 0.0


def _two_lane_road(out: _Layout, w: float) -> None:
    """Ego lane on y = 0 plus an oncoming lane on its left."""
    hw = w / 2.0
    out.lanes = [
        make_lane(0, _straight(ROAD_START, ROAD_END, 0.0), w),
        make_lane(1, _straight(ROAD_END, ROAD_START, w), w),
    ]
    out.polygon = [
        (ROAD_START, -hw), (ROAD_END, -hw), (ROAD_END, w + hw), (ROAD_START, w + hw)
    ]


def _straight_cruise(rng: np.random.Generator, cfg: WorldConfig, out: _Layout) -> None:
    _two_lane_road(out, cfg.lane_width)
    out.speed = float(rng.uniform(6.0, 12.0))


def _lead_vehicle(rng: np.random.Generator, cfg: WorldConfig, out: _Layout) -> None:
    _two_lane_road(out, cfg.lane_width)
    out.speed = float(rng.uniform(8.0, 11.0))
    gap = float(rng.uniform(20.0, 35.0))
    lead_speed = float(rng.uniform(2.0, 6.0))
    out.obstacles = [Obstacle((gap, 0.0), _CAR, 0.0, (lead_speed, 0.0))]


def _turn(
    rng: np.random.Generator, cfg: WorldConfig, out: _Layout, side: float
) -> None:
    """Approach lane, quarter-arc connector, exit lane and a straight-through lane.

    ``side`` is +1 for a left turn and -1 for a right turn.
    """
    w = cfg.lane_width
    hw = w / 2.0
    radius = float(rng.uniform(11.0, 14.0))
    x_s = float(rng.uniform(2.0, 8.0))
    x_e = x_s + radius
    theta = np.linspace(0.0, math.pi / 2.0, 24)
    arc = np.column_stack(
        [x_s + radius * np.sin(theta), side * (radius - radius * np.cos(theta))]
    )
    exit_y = np.linspace(radius, ROAD_END, max(2, int((ROAD_END - radius) / 2.0) + 1))
    out.lanes = [
        make_lane(0, _straight(ROAD_START, x_s, 0.0), w, (1, 3)),
        make_lane(1, arc, w, (2,)),
        make_lane(2, np.column_stack([np.full(exit_y.size, x_e), side * exit_y]), w),
        make_lane(3, _straight(x_s, ROAD_END, 0.0), w),
    ]
    out.route = [0, 1, 2]
    corners = [
        (ROAD_START, -hw), (ROAD_END, -hw), (ROAD_END, hw), (x_e + hw, hw),
        (x_e + hw, ROAD_END), (x_e - hw, ROAD_END), (x_e - hw, radius),
        (x_s, radius), (x_s, hw), (ROAD_START, hw),
    ]
    # mirrored for right turns; orientation does not matter to containment
    out.polygon = [(x, side * y) for x, y in corners]
    out.speed = float(rng.uniform(4.0, 5.0))


def _left_turn(rng: np.random.Generator, cfg: WorldConfig, out: _Layout) -> None:
    _turn(rng, cfg, out, 1.0)


def _right_turn(rng: np.random.Generator, cfg: WorldConfig, out: _Layout) -> None:
    _turn(rng, cfg, out, -1.0)


def _red_light(rng: np.random.Generator, cfg: WorldConfig, out: _Layout) -> None:
    _two_lane_road(out, cfg.lane_width)
    hw = cfg.lane_width / 2.0
    x_l = float(rng.uniform(18.0, 26.0))
    out.light = TrafficLightState(((x_l, -hw), (x_l, hw)), LightState.RED, 0)
    out.speed = float(rng.uniform(4.0, 6.0))


def _lane_blocked_swerve(
    rng: np.random.Generator, cfg: WorldConfig, out: _Layout
) -> None:
    """Static blocker in the ego lane; the route shifts left over a cosine S-curve."""
    w = cfg.lane_width
    hw = w / 2.0
    connector_length = 20.0
    d_obs = float(rng.uniform(30.0, 40.0))
    x_a = d_obs - connector_length - 8.0
    x_b = x_a + connector_length
    u = np.linspace(0.0, 1.0, 21)
    connector = np.column_stack(
        [x_a + connector_length * u, (w / 2.0) * (1.0 - np.cos(math.pi * u))]
    )
    out.lanes = [
        make_lane(0, _straight(ROAD_START, x_a, 0.0), w, (3, 2)),
        make_lane(1, _straight(ROAD_START, x_b, w), w, (4,)),
        make_lane(2, connector, w, (4,)),
        make_lane(3, _straight(x_a, ROAD_END, 0.0), w),
        make_lane(4, _straight(x_b, ROAD_END, w), w),
    ]
    out.route = [0, 2, 4]
    out.polygon = [
        (ROAD_START, -hw), (ROAD_END, -hw), (ROAD_END, w + hw), (ROAD_START, w + hw)
    ]
    out.obstacles = [Obstacle((d_obs, 0.0), _CAR)]
    out.speed = float(rng.uniform(6.0, 8.0))


_TEMPLATES: dict[Template, Callable[[np.random.Generator, WorldConfig, _Layout], None]] = {
    Template.STRAIGHT_CRUISE: _straight_cruise,
    Template.LEAD_VEHICLE: _lead_vehicle,
    Template.LEFT_TURN: _left_turn,
    Template.RIGHT_TURN: _right_turn,
    Template.RED_LIGHT: _red_light,
    Template.LANE_BLOCKED_SWERVE: _lane_blocked_swerve,
}


def _draft(
    scenario_id: str, seed: int, template: Template, layout: _Layout, cfg: WorldConfig
) -> Scenario:
    start = Pose2D(0.0, 0.0, 0.0)
    # placeholder until the expert is rolled out over the finished geometry
    hold = Trajectory(tuple([start] * cfg.horizon), cfg.dt)
    return Scenario(
        id=scenario_id,
        template=template,
        lanes=tuple(layout.lanes),
        drivable_area=np.array(layout.polygon, dtype=np.float64),
        obstacles=tuple(layout.obstacles),
        traffic_light=layout.light,
        command=COMMANDS[template],
        ego_start=start,
        ego_speed=layout.speed,
        route=tuple(layout.route),
        expert=hold,
        rng_seed=seed,
    )


def generate_scenario(
    seed: int,
    template: Template,
    cfg: WorldConfig | None = None,
    scenario_id: str | None = None,
) -> Scenario:
    """Draw a valid scenario; infeasible draws are resampled up to ``max_retries``."""
    cfg = cfg or WorldConfig()
    template = Template(template)
    scenario_id = scenario_id or f"{template.value}-{seed}"
    rng = np.random.default_rng([seed, list(Template).index(template)])
    problems: list[str] = []
    for attempt in range(cfg.max_retries):
        layout = _Layout()
        _TEMPLATES[template](rng, cfg, layout)
        draft = _draft(scenario_id, seed, template, layout, cfg)
        try:
            scenario = replace(draft, expert=expert_plan(draft, cfg))
        except ScenarioInfeasibleError as e:
            problems = [str(e)]
            continue
        problems = check_expert(scenario, cfg)
        if not problems:
            if attempt:
                logger.debug("%s accepted after %d resamples", scenario_id, attempt)
            return scenario
    raise ScenarioInfeasibleError(
        f"{scenario_id}: no valid draw in {cfg.max_retries} attempts (last: {problems})"
    )
