from collections.abc import Callable, Sequence

import numpy as np
import pytest

from anchorplan.config import RunConfig
from anchorplan.core.traj import Pose2D, Trajectory
from anchorplan.world.generate import make_lane
from anchorplan.world.models import (
    Command,
    Obstacle,
    Scenario,
    Template,
    TrafficLightState,
    WorldConfig,
)

LANE_WIDTH = 3.5

ScenarioFactory = Callable[..., Scenario]


def cruise(speed: float = 8.0, horizon: int = 8, dt: float = 0.5) -> Trajectory:
    """Constant speed along y = 0 from the origin."""
    return Trajectory.from_xy(
        [[speed * dt * (i + 1), 0.0] for i in range(horizon)], dt
    )


def build_road(
    *,
    obstacles: Sequence[Obstacle] = (),
    light: TrafficLightState | None = None,
    expert: Trajectory | None = None,
    scenario_id: str = "road-0",
) -> Scenario:
    """Two-lane straight road: ego lane on y = 0 heading +x, oncoming lane at y = 3.5."""
    xs = np.linspace(-30.0, 90.0, 61)
    ego_lane = np.column_stack([xs, np.zeros_like(xs)])
    oncoming = np.column_stack([xs[::-1], np.full_like(xs, LANE_WIDTH)])
    hw = LANE_WIDTH / 2.0
    return Scenario(
        id=scenario_id,
        template=Template.STRAIGHT_CRUISE,
        lanes=(make_lane(0, ego_lane, LANE_WIDTH), make_lane(1, oncoming, LANE_WIDTH)),
        drivable_area=np.array(
            [[-30.0, -hw], [90.0, -hw], [90.0, LANE_WIDTH + hw], [-30.0, LANE_WIDTH + hw]]
        ),
        obstacles=tuple(obstacles),
        traffic_light=light,
        command=Command.GO_STRAIGHT,
        ego_start=Pose2D(0.0, 0.0, 0.0),
        ego_speed=8.0,
        route=(0,),
        expert=expert or cruise(),
        rng_seed=0,
    )


@pytest.fixture(scope="module")
def road() -> Scenario:
    return build_road()


@pytest.fixture(scope="module")
def road_factory() -> ScenarioFactory:
    return build_road


@pytest.fixture(scope="module")
def world_cfg() -> WorldConfig:
    return WorldConfig()


@pytest.fixture(scope="module")
def tiny_run_config() -> RunConfig:
    """Small models and a handful of scenarios; enough for end-to-end plumbing."""
    return RunConfig.model_validate(
        {
            "seed": 3,
            "data": {"train_per_template": 3, "eval_per_template": 1},
            "decoder": {"embed": 8, "heads": 2, "head_hidden": [8]},
            "denoiser": {"context_width": 8, "hidden": [16], "confidence_hidden": [8]},
            "planner": {"k_static": 4, "T": 20, "t_trunc": 6},
            "train": {"epochs": 1, "batch_size": 4},
        }
    )
