import math

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon

from anchorplan.typ import FloatArray

from .geometry import rect_corners
from .models import LightState, PerceptionBundle, Scenario, WorldConfig

CHANNELS = ("drivable", "lane_center", "occupancy", "stop_line")
OBJECT_WIDTH = 8
# feature scales keep tokens roughly in [-1, 1]
_POS_SCALE = 32.0
_SIZE_SCALE = 5.0
_SPEED_SCALE = 10.0


def _to_ego(s: Scenario, pts: FloatArray) -> FloatArray:
    p = s.ego_start
    c, sn = math.cos(p.heading), math.sin(p.heading)
    d = np.asarray(pts, dtype=np.float64) - np.array([p.x, p.y])
    return np.column_stack([c * d[:, 0] + sn * d[:, 1], -sn * d[:, 0] + c * d[:, 1]])


def cell_centers(cfg: WorldConfig, supersample: int = 1) -> tuple[FloatArray, FloatArray]:
    """Ego-frame sample coordinates with shape (G*ss, G*ss); axis 0 indexes x."""
    n = cfg.grid * supersample
    size = cfg.extent / n
    coords = -cfg.extent / 2.0 + size * (np.arange(n) + 0.5)
    return np.meshgrid(coords, coords, indexing="ij")


def _coverage(geom: Polygon, cfg: WorldConfig) -> FloatArray:
    """Fraction of each cell covered by ``geom``, estimated on a sub-grid."""
    ss = cfg.supersample
    gx, gy = cell_centers(cfg, ss)
    hit = np.asarray(shapely.intersects_xy(geom, gx, gy), dtype=np.float64)
    return hit.reshape(cfg.grid, ss, cfg.grid, ss).mean(axis=(1, 3))


def _lane_proximity(s: Scenario, cfg: WorldConfig) -> FloatArray:
    gx, gy = cell_centers(cfg)
    pts = shapely.points(gx.ravel(), gy.ravel())
    nearest = np.full(gx.size, np.inf)
    for lane in s.lanes:
        line = LineString(_to_ego(s, lane.centerline))
        nearest = np.minimum(nearest, shapely.distance(line, pts))
    return np.exp(-(nearest**2) / (2.0 * cfg.lane_sigma**2)).reshape(gx.shape)


def _stop_line(s: Scenario, cfg: WorldConfig) -> FloatArray:
    light = s.traffic_light
    out = np.zeros((cfg.grid, cfg.grid))
    if light is None:
        return out
    gx, gy = cell_centers(cfg)
    line = LineString(_to_ego(s, np.array(light.stop_line)))
    d = shapely.distance(line, shapely.points(gx.ravel(), gy.ravel())).reshape(gx.shape)
    value = 1.0 if light.state == LightState.RED else 0.5
    out[d <= cfg.stop_line_band] = value
    return out


def _occupancy(s: Scenario, cfg: WorldConfig) -> FloatArray:
    if not s.obstacles:
        return np.zeros((cfg.grid, cfg.grid))
    boxes = [
        Polygon(
            _to_ego(
                s, rect_corners(*o.center, o.heading, o.extent[0], o.extent[1])
            )
        )
        for o in s.obstacles
    ]
    return _coverage(shapely.union_all(boxes), cfg)


def object_tokens(s: Scenario) -> FloatArray:
    """Per obstacle: relative center, extent, heading sin/cos, forward/lateral speed."""
    h = s.ego_start.heading
    c, sn = math.cos(h), math.sin(h)
    rows = []
    for o in s.obstacles:
        (cx, cy), = _to_ego(s, np.array([o.center]))
        vx, vy = o.velocity
        rel = o.heading - h
        rows.append(
            [
                cx / _POS_SCALE,
                cy / _POS_SCALE,
                o.extent[0] / _SIZE_SCALE,
                o.extent[1] / _SIZE_SCALE,
                math.sin(rel),
                math.cos(rel),
                (c * vx + sn * vy) / _SPEED_SCALE,
                (-sn * vx + c * vy) / _SPEED_SCALE,
            ]
        )
    return np.array(rows, dtype=np.float64).reshape(-1, OBJECT_WIDTH)


def map_tokens(s: Scenario, cfg: WorldConfig) -> FloatArray:
    """Per lane: centerline resampled to ``map_points`` evenly spaced points."""
    rows = []
    for lane in s.lanes:
        line = LineString(_to_ego(s, lane.centerline))
        pts = shapely.line_interpolate_point(
            line, np.linspace(0.0, 1.0, cfg.map_points), normalized=True
        )
        rows.append(shapely.get_coordinates(pts).ravel() / _POS_SCALE)
    return np.array(rows, dtype=np.float64).reshape(-1, 2 * cfg.map_points)


def extract_perception(s: Scenario, cfg: WorldConfig | None = None) -> PerceptionBundle:
    cfg = cfg or WorldConfig()
    drivable = Polygon(_to_ego(s, s.drivable_area))
    bev = np.stack(
        [
            _coverage(drivable, cfg),
            _lane_proximity(s, cfg),
            _occupancy(s, cfg),
            _stop_line(s, cfg),
        ]
    )
    return PerceptionBundle(
        bev=np.clip(bev, 0.0, 1.0),
        object_tokens=object_tokens(s),
        map_tokens=map_tokens(s, cfg),
        command_token=s.command.one_hot(),
    )
