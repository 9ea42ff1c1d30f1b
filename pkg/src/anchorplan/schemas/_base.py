from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict

from anchorplan.core.traj import Pose2D, Trajectory


def _tolist(v: Any) -> Any:
    return v.tolist() if isinstance(v, np.ndarray) else v


Point = tuple[float, float]
Points = Annotated[list[Point], BeforeValidator(_tolist)]
Rows = Annotated[list[list[float]], BeforeValidator(_tolist)]


class BaseDoc(BaseModel):
    model_config = ConfigDict(from_attributes=True, extra="forbid")


class BasePose(BaseDoc):
    x: float
    y: float
    heading: float

    def to_domain(self) -> Pose2D:
        return Pose2D(self.x, self.y, self.heading)


class BaseTrajectory(BaseDoc):
    dt: float
    waypoints: list[BasePose]

    def to_domain(self) -> Trajectory:
        return Trajectory(tuple(p.to_domain() for p in self.waypoints), self.dt)
