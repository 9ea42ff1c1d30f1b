import numpy as np

from anchorplan.world.models import (
    Command,
    LaneElement,
    LightState,
    Obstacle,
    Scenario,
    Template,
    TrafficLightState,
)

from ._base import BaseDoc, BasePose, BaseTrajectory, Point, Points


class LaneDoc(BaseDoc):
    id: int
    centerline: Points
    left_boundary: Points
    right_boundary: Points
    width: float
    successors: list[int]

    def to_domain(self) -> LaneElement:
        return LaneElement(
            self.id,
            np.array(self.centerline),
            np.array(self.left_boundary),
            np.array(self.right_boundary),
            self.width,
            tuple(self.successors),
        )


class ObstacleDoc(BaseDoc):
    center: Point
    extent: Point
    heading: float
    velocity: Point

    def to_domain(self) -> Obstacle:
        return Obstacle(self.center, self.extent, self.heading, self.velocity)


class TrafficLightDoc(BaseDoc):
    stop_line: tuple[Point, Point]
    state: LightState
    lane_id: int

    def to_domain(self) -> TrafficLightState:
        return TrafficLightState(self.stop_line, self.state, self.lane_id)


class ScenarioDoc(BaseDoc):
    id: str
    template: Template
    lanes: list[LaneDoc]
    drivable_area: Points
    obstacles: list[ObstacleDoc]
    traffic_light: TrafficLightDoc | None
    command: Command
    ego_start: BasePose
    ego_speed: float
    route: list[int]
    expert: BaseTrajectory
    rng_seed: int

    def to_domain(self) -> Scenario:
        return Scenario(
            id=self.id,
            template=self.template,
            lanes=tuple(lane.to_domain() for lane in self.lanes),
            drivable_area=np.array(self.drivable_area),
            obstacles=tuple(o.to_domain() for o in self.obstacles),
            traffic_light=(
                self.traffic_light.to_domain() if self.traffic_light else None
            ),
            command=self.command,
            ego_start=self.ego_start.to_domain(),
            ego_speed=self.ego_speed,
            route=tuple(self.route),
            expert=self.expert.to_domain(),
            rng_seed=self.rng_seed,
        )
