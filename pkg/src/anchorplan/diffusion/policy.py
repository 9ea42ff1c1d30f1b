from dataclasses import dataclass

import numpy as np

from anchorplan.anchors.vocab import AnchorSet, Provenance, StaticVocabulary, fuse
from anchorplan.decoder.model import (
    DecoderConfig,
    DecoderModel,
    decode_anchors,
    encode_streams,
    pool_context,
)
from anchorplan.nn import Graph, Module, Parameter
from anchorplan.typ import FloatArray
from anchorplan.world.models import PerceptionBundle

from .denoiser import ConfidenceHead, Denoiser, DenoiserConfig
from .sampler import InitMode, PlannerConfig, PlanResult, truncated_sample
from .schedule import NoiseSchedule, make_schedule


@dataclass
class PlannerModels:
    decoder: DecoderModel
    denoiser: Denoiser
    confidence: ConfidenceHead

    @classmethod
    def create(
        cls, decoder: DecoderConfig | None = None, denoiser: DenoiserConfig | None = None
    ) -> "PlannerModels":
        return cls(DecoderModel(decoder), Denoiser(denoiser), ConfidenceHead(denoiser))

    def sections(self) -> dict[str, Module]:
        """Checkpoint section names."""
        return {
            "dyn_decoder": self.decoder,
            "denoiser": self.denoiser,
            "confidence": self.confidence,
        }

    def parameters(self) -> list[Parameter]:
        return [p for m in self.sections().values() for p in m.parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


@dataclass(frozen=True, eq=False)
class SceneEncoding:
    dynamic: FloatArray  # (K_d, 2H)
    context: FloatArray  # (1, embed)
    attention: list[FloatArray]


def encode_scene(models: PlannerModels, bundle: PerceptionBundle) -> SceneEncoding:
    """Inference-only pass of the decoder: dynamic anchors and the pooled context."""
    g = Graph()
    tokens = encode_streams(g, bundle, models.decoder)
    anchors, weights = decode_anchors(g, tokens, models.decoder)
    context = pool_context(g, tokens, models.decoder)
    return SceneEncoding(anchors.data.copy(), context.data.copy(), weights)


def anchor_set(
    mode: InitMode, vocab: StaticVocabulary, dynamic: FloatArray, k_dynamic: int
) -> AnchorSet:
    match mode:
        case InitMode.ANCHORS:
            return fuse(vocab, dynamic, k_dynamic)
        case InitMode.STATIC:
            return fuse(vocab, np.empty((0, vocab.anchors.shape[1])), allow_empty=True)
        case InitMode.NOISE:
            width = vocab.anchors.shape[1]
            count = k_dynamic + vocab.k
            return AnchorSet(np.zeros((count, width)), (Provenance.NOISE,) * count)


def plan(
    models: PlannerModels,
    vocab: StaticVocabulary,
    bundle: PerceptionBundle,
    cfg: PlannerConfig,
    *,
    seed: int,
    mode: InitMode = InitMode.ANCHORS,
    steps: int | None = None,
    schedule: NoiseSchedule | None = None,
    dt: float = 0.5,
) -> PlanResult:
    schedule = schedule or make_schedule(cfg.schedule, cfg.T)
    scene = encode_scene(models, bundle)
    anchors = anchor_set(mode, vocab, scene.dynamic, cfg.k_dynamic)
    return truncated_sample(
        anchors,
        scene.context,
        cfg.steps if steps is None else steps,
        seed,
        predictor=models.denoiser,
        scorer=models.confidence,
        schedule=schedule,
        t_start=cfg.T if mode == InitMode.NOISE else cfg.t_trunc,
        clip_residual=cfg.clip_residual,
        dt=dt,
    )
