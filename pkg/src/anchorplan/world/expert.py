import logging
import math
from typing import NamedTuple

import numpy as np
from shapely.geometry import Point

from anchorplan.core.traj import Trajectory, kinematics, normalize_angle
from anchorplan.errors import ScenarioInfeasibleError

from . import geometry
from .models import LightState, Scenario, Template, WorldConfig

logger = logging.getLogger("anchorplan")

# extra lateral clearance for treating an obstacle as being in the ego path
_PATH_MARGIN = 0.3


class _Leader(NamedTuple):
    gap: float  # bumper to bumper along the route
    speed: float  # along the route


def _leaders(
    s: Scenario,
    cfg: WorldConfig,
    arclength: float,
    time: float,
    stop_line: bool = True,
) -> list[_Leader]:
    route = s.route_line
    found: list[_Leader] = []
    for o in s.obstacles:
        cx, cy = o.center_at(time)
        pt = Point(cx, cy)
        if route.distance(pt) >= (cfg.ego.width + o.extent[1]) / 2.0 + _PATH_MARGIN:
            continue
        d = route.project(pt)
        if d <= arclength:
            continue
        gap = d - arclength - (cfg.ego.length + o.extent[0]) / 2.0
        # route tangent at the obstacle
        a, b = route.interpolate(max(d - 0.5, 0.0)), route.interpolate(d + 0.5)
        tx, ty = b.x - a.x, b.y - a.y
        norm = math.hypot(tx, ty) or 1.0
        found.append(_Leader(gap, (o.velocity[0] * tx + o.velocity[1] * ty) / norm))
    light = s.traffic_light
    if stop_line and light is not None and light.state == LightState.RED:
        (ax, ay), (bx, by) = light.stop_line
        d = route.project(Point((ax + bx) / 2.0, (ay + by) / 2.0))
        if d > arclength:
            found.append(_Leader(d - arclength - cfg.ego.length / 2.0, 0.0))
    return found


def idm_accel(
    v: float, desired: float, leaders: list[_Leader], cfg: WorldConfig
) -> float:
    """Intelligent driver model acceleration, clamped to the comfort envelope."""
    free = 1.0 - (v / desired) ** 4 if desired > 0 else -1.0
    interaction = 0.0
    for leader in leaders:
        gap = max(leader.gap, 1e-3)
        dv = v - leader.speed
        s_star = cfg.standstill_gap + max(
            0.0,
            v * cfg.idm_headway + v * dv / (2.0 * math.sqrt(cfg.idm_accel * cfg.idm_decel)),
        )
        interaction = max(interaction, (s_star / gap) ** 2)
    a = cfg.idm_accel * (free - interaction)
    return float(np.clip(a, -cfg.brake_limit, cfg.idm_accel))


def _steer(
    s: Scenario, cfg: WorldConfig, x: float, y: float, heading: float, v: float
) -> float:
    """Pure-pursuit curvature toward a lookahead point on the route."""
    route = s.route_line
    here = route.project(Point(x, y))
    lookahead = max(cfg.lookahead_min, cfg.lookahead_gain * v)
    target = route.interpolate(min(here + lookahead, route.length))
    dx, dy = target.x - x, target.y - y
    dist = math.hypot(dx, dy)
    if dist < 1e-6:
        return 0.0
    alpha = normalize_angle(math.atan2(dy, dx) - heading)
    return 2.0 * math.sin(alpha) / dist


def expert_plan(s: Scenario, cfg: WorldConfig | None = None) -> Trajectory:
    """Roll the expert out over the scenario horizon.

    The desired speed is the ego start speed. Obstacles are propagated at
    constant velocity and a red stop line acts as a stopped virtual leader.
    Only the scenario geometry is read; ``s.expert`` is ignored.
    """
    cfg = cfg or WorldConfig()
    dt = cfg.dt / cfg.sim_substeps
    x, y, heading = s.ego_start.x, s.ego_start.y, s.ego_start.heading
    v = s.ego_speed
    xy = np.empty((cfg.horizon, 2), dtype=np.float64)
    for k in range(cfg.horizon * cfg.sim_substeps):
        time = k * dt
        arclength = s.route_line.project(Point(x, y))
        a = idm_accel(v, s.ego_speed, _leaders(s, cfg, arclength, time), cfg)
        kappa = _steer(s, cfg, x, y, heading, v)
        v_next = max(0.0, v + a * dt)
        step = 0.5 * (v + v_next) * dt
        heading = normalize_angle(heading + kappa * step)
        x += step * math.cos(heading)
        y += step * math.sin(heading)
        v = v_next
        if (k + 1) % cfg.sim_substeps == 0:
            xy[(k + 1) // cfg.sim_substeps - 1] = (x, y)
    t = Trajectory.from_xy(xy, cfg.dt, s.ego_start.heading)
    if geometry.crosses_red_line(t, s):
        raise ScenarioInfeasibleError(f"{s.id}: expert cannot stop before the red line")
    return t


def min_leader_gap(t: Trajectory, s: Scenario, cfg: WorldConfig | None = None) -> float:
    """Smallest bumper gap to any in-path obstacle over the horizon (inf if none)."""
    cfg = cfg or WorldConfig()
    gaps = [
        leader.gap
        for p, time in zip(t.waypoints, t.times, strict=True)
        for leader in _leaders(
            s, cfg, s.route_line.project(Point(p.x, p.y)), float(time), stop_line=False
        )
    ]
    return min(gaps, default=math.inf)


def check_expert(s: Scenario, cfg: WorldConfig | None = None) -> list[str]:
    """Names of the validity rules the scenario's expert trajectory breaks."""
    cfg = cfg or WorldConfig()
    t = s.expert
    failed: list[str] = []
    if geometry.inside_drivable(t, s, cfg.ego) < 1.0:
        failed.append("drivable")
    if geometry.collides(t, s, cfg.ego) is not None:
        failed.append("collision")
    if geometry.crosses_red_line(t, s):
        failed.append("red_light")
    if not geometry.time_to_collision_ok(t, s, cfg.min_ttc, ego=cfg.ego):
        failed.append("ttc")
    kin = kinematics(t, s.ego_start)
    if kin.accel.size and kin.accel.max() > cfg.max_accel:
        failed.append("accel")
    if kin.jerk.size and kin.jerk.max() > cfg.max_jerk:
        failed.append("jerk")
    if geometry.max_lane_offset(t, s) > cfg.max_lateral:
        failed.append("lane_keeping")
    if geometry.mean_direction_cosine(t, s) < 0.0:
        failed.append("direction")
    if s.template == Template.LEAD_VEHICLE and min_leader_gap(t, s, cfg) < cfg.standstill_gap:
        failed.append("gap")
    return failed
