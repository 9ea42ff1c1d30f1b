import math
from typing import NamedTuple

import numpy as np
import shapely
from shapely.geometry import Point

from anchorplan.core.traj import Pose2D, Trajectory
from anchorplan.errors import HorizonMismatchError
from anchorplan.typ import FloatArray

from .models import EgoShape, LightState, Obstacle, Scenario

DEFAULT_EGO = EgoShape()


def rect_corners(
    cx: float, cy: float, heading: float, length: float, width: float
) -> FloatArray:
    """Corners of an oriented rectangle, counter-clockwise from front-left."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def _axes(corners: FloatArray) -> FloatArray:
    edges = np.roll(corners, -1, axis=0)[:2] - corners[:2]
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def rects_overlap(a: FloatArray, b: FloatArray) -> bool:
    """Separating-axis test for two rectangles given by their corners."""
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa, pb = a @ axis, b @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return False
    return True


def ego_footprints(t: Trajectory, ego: EgoShape = DEFAULT_EGO) -> FloatArray:
    """(H, 4, 2) ego rectangles, one per waypoint, oriented by the waypoint heading."""
    return np.stack(
        [rect_corners(p.x, p.y, p.heading, ego.length, ego.width) for p in t.waypoints]
    )


def obstacle_corners(o: Obstacle, time: float) -> FloatArray:
    cx, cy = o.center_at(time)
    return rect_corners(cx, cy, o.heading, o.extent[0], o.extent[1])


def check_time_base(t: Trajectory, s: Scenario) -> None:
    if t.horizon != s.horizon or t.dt != s.dt:
        raise HorizonMismatchError(
            f"trajectory (H={t.horizon}, dt={t.dt}) does not match scenario "
            f"(H={s.horizon}, dt={s.dt})"
        )


def collides(t: Trajectory, s: Scenario, ego: EgoShape = DEFAULT_EGO) -> int | None:
    """Earliest waypoint index whose footprint overlaps a propagated obstacle."""
    check_time_base(t, s)
    if not s.obstacles:
        return None
    for i, (box, time) in enumerate(
        zip(ego_footprints(t, ego), t.times, strict=True)
    ):
        for o in s.obstacles:
            if rects_overlap(box, obstacle_corners(o, float(time))):
                return i
    return None


def inside_drivable(t: Trajectory, s: Scenario, ego: EgoShape = DEFAULT_EGO) -> float:
    """Fraction of waypoints whose four footprint corners lie in the drivable area."""
    corners = ego_footprints(t, ego).reshape(-1, 2)
    inside = shapely.intersects_xy(s.polygon, corners[:, 0], corners[:, 1])
    per_waypoint = np.asarray(inside).reshape(t.horizon, 4).all(axis=1)
    return float(per_waypoint.mean())


class LaneMatch(NamedTuple):
    lane_id: int
    offset: float  # unsigned distance to the centerline
    direction: tuple[float, float]  # unit tangent at the projection


def associate_lane(s: Scenario, x: float, y: float) -> LaneMatch:
    """Nearest lane centerline to a point; ties go to the first lane."""
    pt = Point(x, y)
    best = min(s.lanes, key=lambda lane: lane.line.distance(pt))
    line = best.line
    d = line.project(pt)
    lo = line.interpolate(max(d - 0.5, 0.0))
    hi = line.interpolate(min(d + 0.5, line.length))
    dx, dy = hi.x - lo.x, hi.y - lo.y
    norm = math.hypot(dx, dy) or 1.0
    return LaneMatch(best.id, float(line.distance(pt)), (dx / norm, dy / norm))


def route_arclength(s: Scenario, x: float, y: float) -> float:
    return float(s.route_line.project(Point(x, y)))


def route_progress(s: Scenario, t: Trajectory) -> float:
    """Arclength gained along the route between the ego start and the final waypoint."""
    end = t.waypoints[-1]
    return route_arclength(s, end.x, end.y) - route_arclength(
        s, s.ego_start.x, s.ego_start.y
    )


def _orient(p: FloatArray, q: FloatArray, r: FloatArray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def _on_segment(p: FloatArray, q: FloatArray, r: FloatArray) -> bool:
    return bool(
        min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
    )


def segments_intersect(
    p1: FloatArray, p2: FloatArray, q1: FloatArray, q2: FloatArray
) -> bool:
    """Closed-segment intersection (touching counts)."""
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )


def crosses_red_line(t: Trajectory, s: Scenario) -> bool:
    """Whether the path start -> w1 -> ... -> wH touches a red stop line."""
    light = s.traffic_light
    if light is None or light.state != LightState.RED:
        return False
    q1, q2 = (np.asarray(p, dtype=np.float64) for p in light.stop_line)
    pts = np.vstack([[s.ego_start.x, s.ego_start.y], t.xy])
    return any(
        segments_intersect(pts[i], pts[i + 1], q1, q2) for i in range(len(pts) - 1)
    )


def _velocities(t: Trajectory, start: Pose2D) -> FloatArray:
    """Velocity leaving each waypoint (the last reuses the incoming segment)."""
    pts = np.vstack([[start.x, start.y], t.xy])
    seg = np.diff(pts, axis=0) / t.dt
    return np.vstack([seg[1:], seg[-1:]])


def time_to_collision_ok(
    t: Trajectory,
    s: Scenario,
    threshold: float = 1.0,
    step: float = 0.25,
    min_speed: float = 0.1,
    ego: EgoShape = DEFAULT_EGO,
) -> bool:
    """False when constant-velocity extrapolation from any moving waypoint collides
    with an obstacle within ``threshold`` seconds."""
    check_time_base(t, s)
    if not s.obstacles:
        return True
    lookahead = step * np.arange(1, int(math.floor(threshold / step + 1e-9)) + 1)
    for p, v, time in zip(
        t.waypoints, _velocities(t, s.ego_start), t.times, strict=True
    ):
        if math.hypot(v[0], v[1]) < min_speed:
            continue
        for tau in lookahead:
            box = rect_corners(
                p.x + v[0] * tau, p.y + v[1] * tau, p.heading, ego.length, ego.width
            )
            for o in s.obstacles:
                if rects_overlap(box, obstacle_corners(o, float(time + tau))):
                    return False
    return True


def lane_matches(t: Trajectory, s: Scenario) -> list[LaneMatch]:
    return [associate_lane(s, p.x, p.y) for p in t.waypoints]


def max_lane_offset(t: Trajectory, s: Scenario) -> float:
    """Largest distance from a waypoint to its associated lane centerline."""
    return max(m.offset for m in lane_matches(t, s))


def mean_direction_cosine(t: Trajectory, s: Scenario) -> float:
    """Mean cosine between waypoint headings and the associated lane direction."""
    cosines = [
        math.cos(p.heading) * m.direction[0] + math.sin(p.heading) * m.direction[1]
        for p, m in zip(t.waypoints, lane_matches(t, s), strict=True)
    ]
    return float(np.mean(cosines))
