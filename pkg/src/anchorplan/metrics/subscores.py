import numpy as np

from anchorplan.core.traj import Trajectory, kinematics
from anchorplan.world import geometry
from anchorplan.world.models import Scenario

from .models import EpdmsConfig, SubScoreId


def _flag(ok: bool) -> float:
    return 1.0 if ok else 0.0


def subscore(m: SubScoreId, t: Trajectory, s: Scenario, cfg: EpdmsConfig) -> float:
    """Score in [0, 1]; everything but EP is binary."""
    geometry.check_time_base(t, s)
    match m:
        case SubScoreId.NC:
            return _flag(geometry.collides(t, s, cfg.ego) is None)
        case SubScoreId.DAC:
            return _flag(geometry.inside_drivable(t, s, cfg.ego) == 1.0)
        case SubScoreId.DDC:
            return _flag(geometry.mean_direction_cosine(t, s) >= 0.0)
        case SubScoreId.TLC:
            return _flag(not geometry.crosses_red_line(t, s))
        case SubScoreId.TTC:
            return _flag(
                geometry.time_to_collision_ok(
                    t, s, cfg.ttc_threshold, cfg.ttc_step, cfg.ttc_min_speed, cfg.ego
                )
            )
        case SubScoreId.EP:
            reference = geometry.route_progress(s, s.expert)
            if reference < cfg.min_progress:
                return 1.0
            return float(np.clip(geometry.route_progress(s, t) / reference, 0.0, 1.0))
        case SubScoreId.HC:
            accel = kinematics(t, s.ego_start).accel
            return _flag(not accel.size or float(accel.max()) <= cfg.max_accel)
        case SubScoreId.LK:
            return _flag(geometry.max_lane_offset(t, s) <= cfg.max_lateral)
        case SubScoreId.EC:
            jerk = kinematics(t, s.ego_start).jerk
            return _flag(not jerk.size or float(jerk.max()) <= cfg.max_jerk)


def all_subscores(
    t: Trajectory, s: Scenario, cfg: EpdmsConfig
) -> dict[SubScoreId, float]:
    return {m: subscore(m, t, s, cfg) for m in SubScoreId}

