from .traj import (
    DEFAULT_DT,
    DEFAULT_HORIZON,
    Kinematics,
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

__all__ = [
    "DEFAULT_DT",
    "DEFAULT_HORIZON",
    "Kinematics",
    "Pose2D",
    "Trajectory",
    "ade",
    "ade_many",
    "flatten",
    "kinematics",
    "normalize_angle",
    "recompute_headings",
    "to_global",
    "to_local",
    "unflatten",
]
