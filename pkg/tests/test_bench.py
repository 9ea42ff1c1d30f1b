import xml.etree.ElementTree as ET

import numpy as np
import pytest

from anchorplan.anchors import StaticVocabulary
from anchorplan.bench import (
    Viewport,
    build_static_vocab,
    evaluate_scenarios,
    generate_dataset,
    local_expert,
    parse_path,
    per_template,
    plan_scenario,
    render_plan,
    render_vocabulary,
    scenario_specs,
    steps_table,
    stream_label,
)
from anchorplan.bench.ablation import TIMING_COLUMN
from anchorplan.config import RunConfig
from anchorplan.decoder import Stream
from anchorplan.diffusion import PlannerModels
from anchorplan.metrics import HEADER, corpus_epdms
from anchorplan.schemas.artifacts import Split
from anchorplan.world import Scenario, Template, generate_scenario

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def dataset(tiny_run_config: RunConfig) -> list[tuple[Scenario, Split]]:
    return generate_dataset(tiny_run_config)


@pytest.fixture(scope="module")
def tiny_vocab(
    dataset: list[tuple[Scenario, Split]], tiny_run_config: RunConfig
) -> StaticVocabulary:
    return build_static_vocab([s for s, split in dataset if split == Split.TRAIN], tiny_run_config)


@pytest.fixture(scope="module")
def tiny_models(tiny_run_config: RunConfig) -> PlannerModels:
    return PlannerModels.create(tiny_run_config.decoder, tiny_run_config.denoiser)


class TestPipeline:
    def test_specs(self, tiny_run_config: RunConfig) -> None:
        specs = scenario_specs(tiny_run_config)
        assert len(specs) == 6 * 4
        assert len({s.id for s in specs}) == len(specs)
        assert specs[0].id == "StraightCruise-train-0000"
        reseeded = scenario_specs(tiny_run_config.model_copy(update={"seed": 4}))
        assert [s.id for s in reseeded] == [s.id for s in specs]
        assert all(a.seed != b.seed for a, b in zip(specs, reseeded, strict=True))

    def test_worker_count_does_not_change_data(
        self, tiny_run_config: RunConfig, dataset: list[tuple[Scenario, Split]]
    ) -> None:
        parallel = generate_dataset(tiny_run_config.model_copy(update={"jobs": 2}))
        for (a, _), (b, _) in zip(dataset, parallel, strict=True):
            assert a.id == b.id
            assert np.array_equal(a.expert.xy, b.expert.xy)

    def test_local_expert_ignores_translation(self) -> None:
        s = generate_scenario(5, Template.LEFT_TURN)
        moved = s.translated(40.0, -12.0)
        assert np.allclose(local_expert(moved), local_expert(s), atol=1e-9)

    def test_vocabulary_size(self, tiny_vocab: StaticVocabulary) -> None:
        assert tiny_vocab.k == 4
        assert tiny_vocab.anchors.shape == (4, 16)


class TestEvaluate:
    def test_plan_is_returned_in_world_frame(
        self,
        tiny_models: PlannerModels,
        tiny_vocab: StaticVocabulary,
        tiny_run_config: RunConfig,
    ) -> None:
        s = generate_scenario(2, Template.STRAIGHT_CRUISE)
        moved = s.translated(25.0, 7.0)
        a = plan_scenario(tiny_models, tiny_vocab, s, tiny_run_config)
        b = plan_scenario(tiny_models, tiny_vocab, moved, tiny_run_config)
        assert np.allclose(b.result.candidates, a.result.candidates, atol=1e-9)
        assert np.allclose(b.trajectory.xy, a.trajectory.xy + [25.0, 7.0], atol=1e-9)

    def test_reports_and_grouping(
        self,
        tiny_models: PlannerModels,
        tiny_vocab: StaticVocabulary,
        tiny_run_config: RunConfig,
        dataset: list[tuple[Scenario, Split]],
    ) -> None:
        scenarios = [s for s, split in dataset if split == Split.EVAL]
        reports = evaluate_scenarios(scenarios, tiny_run_config, tiny_models, tiny_vocab)
        assert [r.scenario_id for r in reports] == [s.id for s in scenarios]
        assert all(r.extras["ade"] >= 0.0 for r in reports)
        groups = per_template(reports)
        assert list(groups) == sorted(t.value for t in Template)
        assert all(g.count == 1 for g in groups.values())

    def test_expert_needs_no_models(
        self, tiny_run_config: RunConfig, dataset: list[tuple[Scenario, Split]]
    ) -> None:
        scenarios = [s for s, _ in dataset[:4]]
        reports = evaluate_scenarios(scenarios, tiny_run_config, expert=True)
        assert all(r.epdms >= 0.9 for r in reports)
        with pytest.raises(ValueError):
            evaluate_scenarios(scenarios, tiny_run_config)

    def test_steps_table_times_each_row(
        self,
        tiny_models: PlannerModels,
        tiny_vocab: StaticVocabulary,
        tiny_run_config: RunConfig,
        dataset: list[tuple[Scenario, Split]],
    ) -> None:
        scenarios = [s for s, split in dataset if split == Split.EVAL]
        header, rows = steps_table(tiny_models, tiny_vocab, scenarios, tiny_run_config, (1, 2))
        assert header == ("steps", *HEADER[:-1], TIMING_COLUMN, "EPDMS")
        timing = header.index(TIMING_COLUMN)
        for n, row in zip((1, 2), rows, strict=True):
            assert row[0] == str(n)
            assert float(row[timing]) > 0.0
            reports = evaluate_scenarios(
                scenarios, tiny_run_config, tiny_models, tiny_vocab, steps=n
            )
            assert float(row[-1]) == corpus_epdms(reports).epdms
            assert all(r.extras["plan_ms"] > 0.0 for r in reports)


class TestRender:
    def test_selected_path_inverts_to_waypoints(
        self,
        tiny_models: PlannerModels,
        tiny_vocab: StaticVocabulary,
        tiny_run_config: RunConfig,
    ) -> None:
        s = generate_scenario(4, Template.LANE_BLOCKED_SWERVE).translated(-8.0, 3.0)
        planned = plan_scenario(tiny_models, tiny_vocab, s, tiny_run_config)
        root = ET.fromstring(render_plan(s, planned.result))
        vp = Viewport.from_element(root)

        selected = root.find(f"./{SVG}path[@class='selected']")
        assert selected is not None
        xy = vp.from_svg(parse_path(selected.attrib["d"]))
        assert np.allclose(xy, planned.trajectory.xy, atol=1e-6)

        truth = root.find(f"./{SVG}path[@class='ground-truth']")
        assert truth is not None
        assert np.allclose(vp.from_svg(parse_path(truth.attrib["d"])), s.expert.xy, atol=1e-6)

        anchors = root.findall(f"./{SVG}g[@id='anchors']/{SVG}path")
        assert len(anchors) == len(planned.result)
        static = [a for a in anchors if a.attrib["class"] == "anchor static"]
        assert len(static) == tiny_vocab.k
        assert {a.attrib["stroke"] for a in static} == {"#9e9e9e"}
        assert len(root.findall(f"./{SVG}g[@id='scene']/{SVG}path[@class='obstacle']")) == len(
            s.obstacles
        )

    def test_vocabulary_render(self, tiny_vocab: StaticVocabulary) -> None:
        root = ET.fromstring(render_vocabulary(tiny_vocab))
        vp = Viewport.from_element(root)
        anchors = root.findall(f"./{SVG}g[@id='anchors']/{SVG}path")
        assert len(anchors) == tiny_vocab.k
        assert {a.attrib["class"] for a in anchors} == {"anchor static"}
        for path, anchor in zip(anchors, tiny_vocab.anchors, strict=True):
            xy = vp.from_svg(parse_path(path.attrib["d"]))
            assert np.allclose(xy, anchor.reshape(-1, 2), atol=1e-6)
        ego = root.find(f"./{SVG}circle[@class='ego']")
        assert ego is not None
        origin = vp.from_svg(np.array([[float(ego.attrib["cx"]), float(ego.attrib["cy"])]]))
        assert np.allclose(origin, 0.0, atol=1e-6)

    def test_viewport_roundtrip(self) -> None:
        pts = np.array([[-10.0, 4.0], [30.0, -2.0], [5.0, 12.5]])
        vp = Viewport.fit(pts, size=400.0)
        uv = vp.to_svg(pts)
        assert uv.min() >= vp.margin - 1e-9
        assert uv[:, 0].max() <= vp.width - vp.margin + 1e-9
        assert np.allclose(vp.from_svg(uv), pts)


def test_stream_labels() -> None:
    assert stream_label(()) == "none"
    assert stream_label((Stream.BEV, Stream.OBJECTS)) == "+Obj"
