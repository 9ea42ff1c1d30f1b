from .expert import check_expert, expert_plan
from .generate import generate_scenario
from .geometry import (
    associate_lane,
    collides,
    crosses_red_line,
    inside_drivable,
    route_progress,
    time_to_collision_ok,
)
from .models import (
    Command,
    EgoShape,
    LaneElement,
    LightState,
    Obstacle,
    PerceptionBundle,
    Scenario,
    Template,
    TrafficLightState,
    WorldConfig,
)
from .perception import extract_perception

__all__ = [
    "Command",
    "EgoShape",
    "LaneElement",
    "LightState",
    "Obstacle",
    "PerceptionBundle",
    "Scenario",
    "Template",
    "TrafficLightState",
    "WorldConfig",
    "associate_lane",
    "check_expert",
    "collides",
    "crosses_red_line",
    "expert_plan",
    "extract_perception",
    "generate_scenario",
    "inside_drivable",
    "route_progress",
    "time_to_collision_ok",
]
