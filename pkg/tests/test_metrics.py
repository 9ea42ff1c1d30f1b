import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from anchorplan.config import RunConfig
from anchorplan.core.traj import Trajectory
from anchorplan.metrics import (
    HEADER,
    PENALTIES,
    WEIGHTED,
    EpdmsConfig,
    SubScoreId,
    all_subscores,
    corpus_epdms,
    epdms,
    evaluate,
    filter,
    report_row,
    subscore,
    summary_row,
)
from anchorplan.world import (
    EgoShape,
    LightState,
    Obstacle,
    Scenario,
    Template,
    TrafficLightState,
    generate_scenario,
)

from conftest import ScenarioFactory, cruise

GRID = (0.0, 0.25, 0.5, 1.0)
ONES = {m: 1.0 for m in SubScoreId}


def _path_crosses(t: Trajectory, line: tuple[tuple[float, float], tuple[float, float]]) -> bool:
    """Solve every start-to-waypoint segment against the stop line for its parameters."""
    a, b = np.array(line[0]), np.array(line[1])
    pts = np.vstack([[0.0, 0.0], t.xy])
    for p, q in itertools.pairwise(pts):
        m = np.column_stack([q - p, a - b])
        if abs(np.linalg.det(m)) < 1e-12:
            continue
        s, u = np.linalg.solve(m, a - p)
        if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
            return True
    return False


class TestFilter:
    @pytest.mark.parametrize(("agent", "human"), list(itertools.product(GRID, GRID)))
    def test_grid(self, agent: float, human: float) -> None:
        expected = 1.0 if human == 0.0 else agent
        assert filter(agent, human) == expected

    def test_out_of_range(self) -> None:
        with pytest.raises(ValueError):
            filter(1.5, 1.0)
        with pytest.raises(ValueError):
            filter(0.5, -0.1)


class TestAggregation:
    def test_all_ones(self) -> None:
        assert epdms(ONES, ONES) == 1.0

    def test_hand_computed_weighted_mean(self) -> None:
        agent = ONES | {SubScoreId.EP: 0.5}
        assert epdms(agent, ONES) == pytest.approx(0.84375, abs=1e-12)

    @pytest.mark.parametrize("penalty", PENALTIES)
    def test_zero_penalty_zeroes_score(self, penalty: SubScoreId) -> None:
        assert epdms(ONES | {penalty: 0.0}, ONES) == 0.0

    def test_human_failure_is_forgiven(self) -> None:
        failed = ONES | {SubScoreId.TLC: 0.0, SubScoreId.TTC: 0.0}
        assert epdms(failed, failed) == 1.0

    def test_bounded_and_monotone(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(200):
            agent = {m: float(rng.choice(GRID)) for m in SubScoreId}
            human = {m: float(rng.choice(GRID)) for m in SubScoreId}
            base = epdms(agent, human)
            assert 0.0 <= base <= 1.0
            m = list(SubScoreId)[int(rng.integers(len(SubScoreId)))]
            raised = agent | {m: min(1.0, agent[m] + 0.25)}
            assert epdms(raised, human) >= base

    def test_custom_weights(self) -> None:
        weights = {m: 1.0 for m in WEIGHTED}
        agent = ONES | {SubScoreId.EP: 0.0}
        assert epdms(agent, ONES, EpdmsConfig(weights=weights)) == pytest.approx(0.8)

    def test_weights_must_cover_weighted_terms(self) -> None:
        with pytest.raises(ValidationError):
            EpdmsConfig(weights={SubScoreId.EP: 1.0})
        with pytest.raises(ValidationError):
            EpdmsConfig(weights={m: 0.0 for m in WEIGHTED})

    def test_missing_subscore(self) -> None:
        agent = {m: 1.0 for m in SubScoreId if m != SubScoreId.LK}
        with pytest.raises(ValueError):
            epdms(agent, ONES)


class TestSubScores:
    def test_expert_on_clear_road(self, road: Scenario) -> None:
        assert all_subscores(road.expert, road, EpdmsConfig()) == ONES

    def test_half_progress(self, road: Scenario) -> None:
        assert subscore(SubScoreId.EP, cruise(4.0), road, EpdmsConfig()) == pytest.approx(0.5)

    def test_overshoot_progress_is_capped(self, road: Scenario) -> None:
        assert subscore(SubScoreId.EP, cruise(12.0), road, EpdmsConfig()) == 1.0

    def test_collision_zeroes_report(self, road_factory: ScenarioFactory) -> None:
        creep = Trajectory.from_xy([[1.0 * (i + 1), 0.0] for i in range(8)])
        s = road_factory(obstacles=[Obstacle((14.0, 0.0), (4.6, 1.9))], expert=creep)
        report = evaluate(cruise(), s)
        assert report.human[SubScoreId.NC] == 1.0
        assert report.agent[SubScoreId.NC] == 0.0
        assert report.epdms == 0.0
        assert report.template == Template.STRAIGHT_CRUISE.value

    def test_wrong_way_fails_direction(self, road: Scenario) -> None:
        reverse = Trajectory.from_xy([[-2.0 * (i + 1), 0.0] for i in range(8)])
        assert subscore(SubScoreId.DDC, reverse, road, EpdmsConfig()) == 0.0

    def test_stationary_plan(self) -> None:
        s = generate_scenario(7, Template.STRAIGHT_CRUISE)
        scores = all_subscores(Trajectory.from_xy(np.zeros((8, 2))), s, EpdmsConfig())
        assert scores[SubScoreId.EP] == 0.0
        assert scores[SubScoreId.HC] == scores[SubScoreId.EC] == 1.0

    def test_red_line_by_one_waypoint(self, road_factory: ScenarioFactory) -> None:
        line = ((20.0, -1.75), (20.0, 1.75))
        s = road_factory(light=TrafficLightState(line, LightState.RED, 0))
        cfg = EpdmsConfig()
        over = Trajectory.from_xy([[x, 0.0] for x in (3, 6, 9, 12, 15, 18, 19.5, 21)])
        short = Trajectory.from_xy([[x, 0.0] for x in (3, 6, 9, 12, 15, 18, 19.5, 19.9)])
        assert subscore(SubScoreId.TLC, over, s, cfg) == 0.0
        assert subscore(SubScoreId.TLC, short, s, cfg) == 1.0
        rng = np.random.default_rng(6)
        for _ in range(100):
            last = [rng.uniform(15.0, 25.0), rng.uniform(-4.0, 4.0)]
            t = Trajectory.from_xy([[2.0 * (i + 1), 0.0] for i in range(7)] + [last])
            expected = 0.0 if _path_crosses(t, line) else 1.0
            assert subscore(SubScoreId.TLC, t, s, cfg) == expected

    def test_ego_shape_must_agree(self) -> None:
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"epdms": {"ego": {"width": 1.5}}})
        cfg = RunConfig.model_validate(
            {"world": {"ego": {"width": 1.5}}, "epdms": {"ego": {"width": 1.5}}}
        )
        assert cfg.epdms.ego == cfg.world.ego == EgoShape(width=1.5)

    @pytest.mark.parametrize("template", list(Template))
    def test_expert_scores_near_perfect(self, template: Template) -> None:
        for seed in range(5):
            s = generate_scenario(seed, template)
            assert evaluate(s.expert, s).epdms >= 0.9, s.id


class TestCorpus:
    def test_means_and_rows(self, road: Scenario) -> None:
        good = evaluate(road.expert, road)
        slow = evaluate(cruise(4.0), road)
        c = corpus_epdms([good, slow])
        assert c.count == 2
        assert c.epdms == pytest.approx((good.epdms + slow.epdms) / 2)
        assert c.subscores[SubScoreId.EP] == pytest.approx(0.75)
        assert len(report_row(good)) == len(summary_row(c)) == len(HEADER)
        assert HEADER[3] == "TL" and HEADER[-1] == "EPDMS"

    def test_empty(self) -> None:
        with pytest.raises(ValueError):
            corpus_epdms([])
