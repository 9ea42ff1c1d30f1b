"""Benchmark-scale checks on the default run config.

Everything but the anchor count is marked ``slow``: it trains the full planner
(several minutes on a desktop CPU). Run with ``pytest -m slow``.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from anchorplan.anchors import Provenance, StaticVocabulary
from anchorplan.bench import (
    build_static_vocab,
    evaluate_scenarios,
    generate_dataset,
    heads_table,
    mean_extra,
    steps_table,
    train_models,
    training_samples,
)
from anchorplan.config import RunConfig, settings
from anchorplan.diffusion import InitMode, PlannerModels, plan
from anchorplan.metrics import SubScoreId, corpus_epdms
from anchorplan.schemas.artifacts import Split
from anchorplan.world import Scenario, Template, extract_perception, generate_scenario


def test_fused_set_has_twenty_anchors() -> None:
    cfg = RunConfig()
    rng = np.random.default_rng(0)
    vocab = StaticVocabulary(rng.normal(size=(cfg.planner.k_static, 16)), 0.0, 0)
    result = plan(
        PlannerModels.create(cfg.decoder, cfg.denoiser),
        vocab,
        extract_perception(generate_scenario(0, Template.LEAD_VEHICLE)),
        cfg.planner,
        seed=0,
    )
    assert len(result) == 20
    assert result.provenance.count(Provenance.DYNAMIC) == 4


@dataclass
class Benchmark:
    cfg: RunConfig
    vocab: StaticVocabulary
    models: PlannerModels
    train: list[Scenario]
    held_out: list[Scenario]


@pytest.fixture(scope="module")
def benchmark() -> Benchmark:
    cfg = RunConfig(jobs=settings.jobs)
    data = generate_dataset(cfg)
    train = [s for s, split in data if split == Split.TRAIN]
    held_out = [s for s, split in data if split == Split.EVAL]
    vocab = build_static_vocab(train, cfg)
    models, _ = train_models(cfg, vocab, training_samples(train, cfg), progress=False)
    return Benchmark(cfg, vocab, models, train, held_out)


def _run(b: Benchmark, mode: InitMode) -> tuple[float, float]:
    reports = evaluate_scenarios(b.held_out, b.cfg, b.models, b.vocab, mode=mode)
    return corpus_epdms(reports).epdms, mean_extra(reports, "ade")


@pytest.mark.slow
class TestBenchmark:
    def test_scale(self, benchmark: Benchmark) -> None:
        assert len(benchmark.train) >= 2000
        assert len(benchmark.held_out) == 300

    def test_anchors_beat_noise(self, benchmark: Benchmark) -> None:
        hybrid, hybrid_ade = _run(benchmark, InitMode.ANCHORS)
        static, _ = _run(benchmark, InitMode.STATIC)
        noise, noise_ade = _run(benchmark, InitMode.NOISE)
        assert hybrid_ade < noise_ade
        assert hybrid > static > noise

    def test_step_count_is_flat(self, benchmark: Benchmark) -> None:
        _, rows = steps_table(benchmark.models, benchmark.vocab, benchmark.held_out, benchmark.cfg)
        scores = [100.0 * float(r[-1]) for r in rows]
        assert max(scores) - min(scores) <= 1.0
        # five steps need not be the best; a fewer-step row matches or beats it
        assert max(scores[:-1]) >= scores[-1]

    def test_streams_accumulate(self, benchmark: Benchmark) -> None:
        header, rows = heads_table(
            benchmark.vocab,
            training_samples(benchmark.train, benchmark.cfg),
            benchmark.held_out,
            benchmark.cfg,
            progress=False,
        )
        scores = [100.0 * float(r[-1]) for r in rows]
        assert all(b - a >= -0.2 for a, b in zip(scores[1:], scores[2:]))
        nc = header.index(SubScoreId.NC.value)
        assert float(rows[2][nc]) > float(rows[1][nc])
