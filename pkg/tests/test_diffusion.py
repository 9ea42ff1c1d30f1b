import numpy as np
import pytest
from pydantic import ValidationError

from anchorplan.anchors import Provenance, StaticVocabulary, fuse, kmeans
from anchorplan.bench.pipeline import local_expert
from anchorplan.decoder import DecoderConfig
from anchorplan.diffusion import (
    DenoiserConfig,
    InitMode,
    NoiseSchedule,
    PlannerConfig,
    PlannerModels,
    ScheduleKind,
    TrainConfig,
    Trainer,
    TrainingSample,
    cosine_schedule,
    forward_noise,
    linear_schedule,
    make_draws,
    make_schedule,
    plan,
    reverse_timesteps,
    sample_loss,
    select,
    timestep_embedding,
    truncated_sample,
)
from anchorplan.diffusion.training import soft_labels
from anchorplan.errors import ShapeError
from anchorplan.nn import Graph, Tensor2, gradient_check
from anchorplan.typ import FloatArray
from anchorplan.world import Template, extract_perception, generate_scenario

SMALL_DECODER = DecoderConfig(embed=8, heads=2, head_hidden=(8,))
SMALL_DENOISER = DenoiserConfig(context_width=8, hidden=(16,), confidence_hidden=(8,))
SMALL_PLANNER = PlannerConfig(T=20, t_trunc=6, k_static=4)


class ResidualOracle:
    """Predicts exactly the noise that separates the state from ``anchors + target``."""

    def __init__(self, schedule: NoiseSchedule, target: FloatArray) -> None:
        self.schedule = schedule
        self.target = target

    def predict_noise(
        self, state: FloatArray, anchors: FloatArray, t: int, context: FloatArray
    ) -> FloatArray:
        residual = state - anchors
        return (residual - self.schedule.signal(t) * self.target) / self.schedule.noise(t)


class FixedScorer:
    def __init__(self, scores: FloatArray) -> None:
        self.scores = np.asarray(scores, dtype=np.float64)

    def score(self, candidates: FloatArray, context: FloatArray) -> FloatArray:
        return self.scores[: len(candidates)]


@pytest.fixture(scope="module")
def samples() -> list[TrainingSample]:
    out = []
    for i, template in enumerate(Template):
        s = generate_scenario(i, template)
        out.append(TrainingSample(s.id, extract_perception(s), local_expert(s)))
    return out


@pytest.fixture(scope="module")
def small_vocab(samples: list[TrainingSample]) -> StaticVocabulary:
    return kmeans(np.stack([s.expert for s in samples]), 4, seed=0)


class TestSchedule:
    @pytest.mark.parametrize("steps", [2, 3, 5, 10, 20, 50, 100, 1000])
    @pytest.mark.parametrize("kind", list(ScheduleKind))
    def test_monotone_and_bounded(self, kind: ScheduleKind, steps: int) -> None:
        s = make_schedule(kind, steps)
        assert s.steps == steps
        assert s.alpha_bar[0] == 1.0
        assert np.all(np.diff(s.alpha_bar) < 0)
        assert np.all(s.alpha_bar > 0)
        assert s.alpha_bar[-1] < 5e-3
        assert s.signal(0) == 1.0 and s.noise(0) == 0.0

    def test_out_of_range_timestep(self) -> None:
        s = cosine_schedule(10)
        with pytest.raises(ValueError):
            s.noise(11)
        with pytest.raises(ValueError):
            s.signal(-1)

    def test_linear_is_rescaled_for_short_chains(self) -> None:
        assert linear_schedule(20).alpha_bar[-1] < 5e-3
        # without rescaling a 20-step linear chain keeps most of its signal
        assert linear_schedule(1000).alpha_bar[20] > 0.9

    @pytest.mark.parametrize("t", [10, 50, 90])
    def test_forward_noise_moments(self, t: int) -> None:
        s = cosine_schedule(100)
        tau0 = np.linspace(10.0, 40.0, 16)
        eps = np.random.default_rng(t).standard_normal((10_000, 16))
        draws = forward_noise(s, np.broadcast_to(tau0, eps.shape), t, eps)
        mean = draws.mean(axis=0)
        var = (draws - s.signal(t) * tau0).var()
        assert np.all(np.abs(mean / (s.signal(t) * tau0) - 1.0) < 0.05)
        assert var == pytest.approx(1.0 - s.alpha_bar[t], rel=0.05)

    def test_forward_noise_shape_mismatch(self) -> None:
        with pytest.raises(ShapeError):
            forward_noise(cosine_schedule(10), np.zeros(16), 3, np.zeros(14))

    def test_timestep_embedding(self) -> None:
        e = timestep_embedding(0, 16)
        assert e.shape == (16,)
        assert e.tolist() == [0.0] * 8 + [1.0] * 8
        assert not np.allclose(timestep_embedding(5), timestep_embedding(6))


class TestSampler:
    def test_reverse_timesteps(self) -> None:
        assert reverse_timesteps(30, 2).tolist() == [30, 15, 0]
        assert reverse_timesteps(30, 3).tolist() == [30, 20, 10, 0]
        assert reverse_timesteps(30, 0).tolist() == [30]
        with pytest.raises(ValueError):
            reverse_timesteps(2, 3)

    def test_select_ties_go_low(self) -> None:
        assert select(np.array([0.1, 0.9, 0.9])) == 1

    @pytest.mark.parametrize("steps", [1, 2, 5])
    def test_oracle_recovers_target(self, steps: int) -> None:
        schedule = cosine_schedule(100)
        rng = np.random.default_rng(steps)
        anchors, target = rng.normal(size=(6, 16)) * 5, rng.normal(size=16)
        result = truncated_sample(
            anchors,
            np.zeros((1, 4)),
            steps,
            seed=7,
            predictor=ResidualOracle(schedule, target),
            scorer=FixedScorer(np.arange(6.0)),
            schedule=schedule,
            t_start=30,
        )
        assert np.allclose(result.candidates, anchors + target, atol=1e-9)
        assert result.selected == 5

    def test_zero_steps_returns_anchors(self) -> None:
        schedule = cosine_schedule(100)
        anchors = np.random.default_rng(0).normal(size=(3, 16))
        result = truncated_sample(
            anchors, np.zeros((1, 4)), 0, seed=0,
            predictor=ResidualOracle(schedule, np.zeros(16)),
            scorer=FixedScorer(np.array([0.0, 2.0, 1.0])),
            schedule=schedule, t_start=30,
        )
        assert np.array_equal(result.candidates, anchors)
        assert result.selected == 1
        assert result.trajectory().xy.tolist() == anchors[1].reshape(8, 2).tolist()

    def test_planner_config_validation(self) -> None:
        with pytest.raises(ValidationError):
            PlannerConfig(T=10, t_trunc=20)
        with pytest.raises(ValidationError):
            PlannerConfig(t_trunc=3, steps=4)


class TestPlan:
    def test_hybrid_static_and_noise_modes(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        models = PlannerModels.create(SMALL_DECODER, SMALL_DENOISER)
        bundle = samples[0].bundle
        hybrid = plan(models, small_vocab, bundle, SMALL_PLANNER, seed=1)
        assert len(hybrid) == 8
        assert hybrid.provenance[:4] == (Provenance.DYNAMIC,) * 4
        static = plan(models, small_vocab, bundle, SMALL_PLANNER, seed=1, mode=InitMode.STATIC)
        assert len(static) == 4
        assert np.array_equal(static.anchors, small_vocab.anchors)
        noise = plan(models, small_vocab, bundle, SMALL_PLANNER, seed=1, mode=InitMode.NOISE)
        assert np.all(noise.anchors == 0.0)
        assert noise.provenance == (Provenance.NOISE,) * 8
        assert noise.selected_provenance == Provenance.NOISE
        assert np.all(np.isfinite(noise.candidates))

    def test_same_seed_same_plan(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        models = PlannerModels.create(SMALL_DECODER, SMALL_DENOISER)
        a = plan(models, small_vocab, samples[1].bundle, SMALL_PLANNER, seed=5)
        b = plan(models, small_vocab, samples[1].bundle, SMALL_PLANNER, seed=5)
        assert np.array_equal(a.candidates, b.candidates)
        assert a.selected == b.selected


class TestTraining:
    def test_soft_labels(self) -> None:
        target = np.zeros(4)
        cands = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 1.0, 0.0], [5.0, 0.0, 5.0, 0.0]])
        labels = soft_labels(cands, target, 0.5)
        assert labels.sum() == pytest.approx(1.0)
        assert labels[0] > labels[1] > labels[2]

    def test_joint_loss_gradients(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        """Full decoder + denoiser + confidence loss against central differences."""
        models = PlannerModels.create(SMALL_DECODER, SMALL_DENOISER)
        schedule = make_schedule(SMALL_PLANNER.schedule, SMALL_PLANNER.T)
        sample = samples[2]
        draws = make_draws(
            models, small_vocab, sample, SMALL_PLANNER, schedule, np.random.default_rng(0)
        )
        assert draws.labels.sum() == pytest.approx(1.0)
        assert len(draws.candidates) == 8

        def loss(g: Graph) -> Tensor2:
            total, _ = sample_loss(g, models, sample, draws, schedule, TrainConfig())
            return total

        err = gradient_check(loss, models.parameters(), 50, np.random.default_rng(1))
        assert err < 1e-4

    def test_trainer_is_deterministic(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        schedule = make_schedule(SMALL_PLANNER.schedule, SMALL_PLANNER.T)
        cfg = TrainConfig(epochs=2, batch_size=4, seed=3)
        histories = []
        for _ in range(2):
            trainer = Trainer(
                PlannerModels.create(SMALL_DECODER, SMALL_DENOISER),
                small_vocab, SMALL_PLANNER, schedule, cfg,
            )
            histories.append(trainer.fit(samples, progress=False))
        assert [h.loss for h in histories[0]] == [h.loss for h in histories[1]]
        assert len(histories[0]) == 2
        assert all(np.isfinite(h.loss) for h in histories[0])

    def test_resumed_fit_continues_epochs(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        schedule = make_schedule(SMALL_PLANNER.schedule, SMALL_PLANNER.T)
        cfg = TrainConfig(epochs=2, batch_size=4, seed=5)

        def trainer() -> Trainer:
            models = PlannerModels.create(SMALL_DECODER, SMALL_DENOISER)
            return Trainer(models, small_vocab, SMALL_PLANNER, schedule, cfg)

        whole, split = trainer(), trainer()
        whole.fit(samples, progress=False)
        split.fit(samples, epochs=1, progress=False)
        split.fit(samples, epochs=1, progress=False)
        assert [h.epoch for h in split.history] == [1, 2]
        assert [h.loss for h in split.history] == [h.loss for h in whole.history]
        for a, b in zip(whole.models.parameters(), split.models.parameters(), strict=True):
            assert np.array_equal(a.data, b.data)

    def test_fuse_matches_plan_layout(
        self, samples: list[TrainingSample], small_vocab: StaticVocabulary
    ) -> None:
        models = PlannerModels.create(SMALL_DECODER, SMALL_DENOISER)
        result = plan(models, small_vocab, samples[0].bundle, SMALL_PLANNER, seed=0, steps=0)
        expected = fuse(small_vocab, result.anchors[:4])
        assert np.array_equal(result.candidates, expected.anchors)
