import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import softmax
from tqdm import tqdm

from anchorplan.anchors.vocab import StaticVocabulary, fuse, nearest_anchor
from anchorplan.core.traj import ade_many
from anchorplan.decoder.model import (
    decode_anchors,
    decoder_loss,
    encode_streams,
    pool_context,
)
from anchorplan.nn import Adam, Graph, Tensor2
from anchorplan.typ import FlatTrajectory, FloatArray
from anchorplan.utils.digest import derive_seed
from anchorplan.world.models import PerceptionBundle

from .policy import PlannerModels, encode_scene
from .sampler import PlannerConfig, truncated_sample
from .schedule import NoiseSchedule, forward_noise

logger = logging.getLogger("anchorplan")


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(20, ge=0)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-3, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    eps: float = Field(1e-8, gt=0)
    decoder_weight: float = Field(1.0, ge=0)
    confidence_weight: float = Field(1.0, ge=0)
    seed: int = 0


class TrainingSample(NamedTuple):
    scenario_id: str
    bundle: PerceptionBundle
    expert: FlatTrajectory


@dataclass(frozen=True, eq=False)
class TrainingDraws:
    t: int
    eps: FloatArray  # (2H,)
    anchor: FloatArray  # (2H,) nearest hybrid anchor to the expert
    candidates: FloatArray  # (K, 2H) one-step refinements of the hybrid set
    labels: FloatArray  # (K,) softmin of candidate ade, sums to 1


class LossParts(NamedTuple):
    total: float
    decoder: float
    noise: float
    confidence: float


def soft_labels(candidates: FloatArray, expert: FlatTrajectory, sigma: float) -> FloatArray:
    return softmax(-ade_many(candidates, expert) / sigma)


def make_draws(
    models: PlannerModels,
    vocab: StaticVocabulary,
    sample: TrainingSample,
    cfg: PlannerConfig,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
) -> TrainingDraws:
    """Sample the per-sample randomness with the current parameters, no gradients."""
    scene = encode_scene(models, sample.bundle)
    hybrid = fuse(vocab, scene.dynamic, cfg.k_dynamic)
    index, _ = nearest_anchor(sample.expert, hybrid)
    t = int(rng.integers(1, cfg.t_trunc + 1))
    eps = rng.standard_normal(len(sample.expert))
    refined = truncated_sample(
        hybrid,
        scene.context,
        1,
        int(rng.integers(1 << 62)),
        predictor=models.denoiser,
        scorer=models.confidence,
        schedule=schedule,
        t_start=cfg.t_trunc,
        clip_residual=cfg.clip_residual,
    )
    return TrainingDraws(
        t=t,
        eps=eps,
        anchor=hybrid.anchors[index].copy(),
        candidates=refined.candidates,
        labels=soft_labels(refined.candidates, sample.expert, cfg.label_sigma),
    )


def sample_loss(
    g: Graph,
    models: PlannerModels,
    sample: TrainingSample,
    draws: TrainingDraws,
    schedule: NoiseSchedule,
    cfg: TrainConfig,
) -> tuple[Tensor2, LossParts]:
    """decoder WTA + noise MSE + confidence BCE for one scene."""
    dec = models.decoder
    tokens = encode_streams(g, sample.bundle, dec)
    dynamic, _ = decode_anchors(g, tokens, dec)
    l_dec = decoder_loss(g, dynamic, sample.expert, dec.cfg.gamma)
    context = pool_context(g, tokens, dec)

    residual = np.asarray(sample.expert) - draws.anchor
    noisy = forward_noise(schedule, residual, draws.t, draws.eps)
    predicted = models.denoiser.forward(
        g, (draws.anchor + noisy)[None, :], draws.anchor[None, :], draws.t, context
    )
    diff = g.sub(predicted, g.constant(draws.eps[None, :]))
    l_noise = g.mean_all(g.mul(diff, diff))

    logits = models.confidence.forward(g, draws.candidates, context)
    l_conf = g.bce_with_logits(logits, draws.labels[:, None])

    total = g.add(
        g.add(g.scale(l_dec, cfg.decoder_weight), l_noise),
        g.scale(l_conf, cfg.confidence_weight),
    )
    return total, LossParts(total.item(), l_dec.item(), l_noise.item(), l_conf.item())


def train_step(
    models: PlannerModels,
    vocab: StaticVocabulary,
    batch: Sequence[TrainingSample],
    optimizer: Adam,
    planner: PlannerConfig,
    schedule: NoiseSchedule,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> LossParts:
    """One Adam update on the batch-mean loss; returns the mean loss components."""
    optimizer.zero_grad()
    parts: list[LossParts] = []
    for sample in batch:
        draws = make_draws(models, vocab, sample, planner, schedule, rng)
        g = Graph()
        loss, p = sample_loss(g, models, sample, draws, schedule, cfg)
        g.backward(g.scale(loss, 1.0 / len(batch)))
        parts.append(p)
    optimizer.step()
    return LossParts(*np.mean(np.array(parts), axis=0).tolist())


@dataclass
class EpochStats:
    epoch: int
    loss: float
    decoder: float
    noise: float
    confidence: float


@dataclass
class Trainer:
    models: PlannerModels
    vocab: StaticVocabulary
    planner: PlannerConfig
    schedule: NoiseSchedule
    cfg: TrainConfig
    history: list[EpochStats] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.optimizer = Adam(
            self.models.parameters(),
            lr=self.cfg.lr,
            betas=(self.cfg.beta1, self.cfg.beta2),
            eps=self.cfg.eps,
        )

    def fit(
        self,
        samples: Sequence[TrainingSample],
        epochs: int | None = None,
        progress: bool = True,
    ) -> list[EpochStats]:
        epochs = self.cfg.epochs if epochs is None else epochs
        if not samples:
            raise ValueError("no training samples")
        for epoch in range(len(self.history), len(self.history) + epochs):
            # keyed by the absolute epoch so resumed training continues the sequence
            shuffle = np.random.default_rng(derive_seed(self.cfg.seed, "shuffle", epoch))
            rng = np.random.default_rng(derive_seed(self.cfg.seed, "draws", epoch))
            order = shuffle.permutation(len(samples))
            batches = [
                [samples[i] for i in order[lo : lo + self.cfg.batch_size]]
                for lo in range(0, len(order), self.cfg.batch_size)
            ]
            parts = [
                train_step(
                    self.models, self.vocab, batch, self.optimizer,
                    self.planner, self.schedule, self.cfg, rng,
                )
                for batch in tqdm(
                    batches, desc=f"epoch {epoch + 1}", disable=not progress, leave=False
                )
            ]
            weights = np.array([len(b) for b in batches], dtype=np.float64)
            mean = np.average(np.array(parts), axis=0, weights=weights)
            stats = EpochStats(epoch + 1, *mean.tolist())
            self.history.append(stats)
            logger.info(
                "epoch %d loss=%.5f decoder=%.5f noise=%.5f confidence=%.5f",
                stats.epoch, stats.loss, stats.decoder, stats.noise, stats.confidence,
            )
        return self.history
