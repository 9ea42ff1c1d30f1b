import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from anchorplan.errors import ShapeError
from anchorplan.nn import MLP, Graph, Module, Tensor2
from anchorplan.typ import FloatArray

from .schedule import timestep_embedding


class DenoiserConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    horizon: int = Field(8, ge=1)
    context_width: int = Field(32, ge=1)
    time_width: int = Field(16, ge=2)
    hidden: tuple[int, ...] = (128, 128)
    confidence_hidden: tuple[int, ...] = (64,)
    # trajectories are divided by this before entering either network
    input_scale: float = Field(10.0, gt=0)
    seed: int = 1


def _tile(g: Graph, context: Tensor2, rows: int) -> Tensor2:
    if context.rows != 1:
        raise ShapeError(f"context must be a single row, got {context.shape}")
    return g.select_rows(context, [0] * rows)


class Denoiser(Module):
    """eps_theta: predicts the injected noise from (anchor + noisy residual, anchor, t, context)."""

    def __init__(self, cfg: DenoiserConfig | None = None) -> None:
        cfg = cfg or DenoiserConfig()
        self.cfg = cfg
        width = 2 * cfg.horizon
        rng = np.random.default_rng(cfg.seed)
        self.net = MLP(
            [2 * width + cfg.time_width + cfg.context_width, *cfg.hidden, width], rng
        )

    def forward(
        self, g: Graph, state: FloatArray, anchors: FloatArray, t: int, context: Tensor2
    ) -> Tensor2:
        k = len(state)
        scale = 1.0 / self.cfg.input_scale
        temb = np.repeat(timestep_embedding(t, self.cfg.time_width)[None, :], k, axis=0)
        x = g.concat_cols(
            [
                g.constant(np.asarray(state) * scale),
                g.constant(np.asarray(anchors) * scale),
                g.constant(temb),
                _tile(g, context, k),
            ]
        )
        return self.net(g, x)

    def predict_noise(
        self, state: FloatArray, anchors: FloatArray, t: int, context: FloatArray
    ) -> FloatArray:
        g = Graph()
        return self.forward(g, state, anchors, t, g.constant(context)).data


class ConfidenceHead(Module):
    """One logit per candidate trajectory given the scene context."""

    def __init__(self, cfg: DenoiserConfig | None = None) -> None:
        cfg = cfg or DenoiserConfig()
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed + 1)
        self.net = MLP(
            [2 * cfg.horizon + cfg.context_width, *cfg.confidence_hidden, 1], rng
        )

    def forward(self, g: Graph, candidates: FloatArray, context: Tensor2) -> Tensor2:
        k = len(candidates)
        x = g.concat_cols(
            [
                g.constant(np.asarray(candidates) / self.cfg.input_scale),
                _tile(g, context, k),
            ]
        )
        return self.net(g, x)

    def score(self, candidates: FloatArray, context: FloatArray) -> FloatArray:
        g = Graph()
        return self.forward(g, candidates, g.constant(context)).data[:, 0]
