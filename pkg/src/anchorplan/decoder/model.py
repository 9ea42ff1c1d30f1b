from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from anchorplan.errors import ShapeError
from anchorplan.nn import (
    MLP,
    Graph,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    Parameter,
    PatchEmbed,
    Tensor2,
)
from anchorplan.typ import FlatTrajectory, FloatArray
from anchorplan.world.models import PerceptionBundle


class Stream(StrEnum):
    # token order inside the sequence follows this declaration
    BEV = "bev"
    OBJECTS = "objects"
    MAP = "map"
    COMMAND = "command"


# enabled decoder inputs, kept in declaration order
StreamSet = tuple[Stream, ...]

ALL_STREAMS: StreamSet = tuple(Stream)


class DecoderConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    embed: int = Field(32, ge=4)
    heads: int = Field(4, ge=1)
    grid: int = Field(32, ge=4)
    channels: int = Field(4, ge=1)
    patch: int = Field(8, ge=1)
    object_width: int = Field(8, ge=1)
    map_width: int = Field(16, ge=2)
    command_width: int = Field(4, ge=1)
    num_queries: int = Field(4, ge=1)
    head_hidden: tuple[int, ...] = (64,)
    horizon: int = Field(8, ge=1)
    # head outputs are multiplied by this so an untrained head emits metre-scale paths
    traj_scale: float = Field(10.0, gt=0)
    gamma: float = Field(0.01, ge=0)
    streams: StreamSet = ALL_STREAMS
    seed: int = 0

    @field_validator("streams")
    @classmethod
    def _declaration_order(cls, v: StreamSet) -> StreamSet:
        order = list(Stream)
        return tuple(sorted(v, key=order.index))

    @model_validator(mode="after")
    def _check_widths(self) -> "DecoderConfig":
        if self.embed % self.heads:
            raise ValueError("embed must be divisible by heads")
        if self.grid % self.patch:
            raise ValueError("grid must be divisible by patch")
        if len(set(self.streams)) != len(self.streams):
            raise ValueError("streams must not repeat")
        return self

    @property
    def output_width(self) -> int:
        return 2 * self.horizon


@dataclass(frozen=True)
class Tokens:
    values: Tensor2 | None  # (n_tokens, embed); None when every enabled stream is empty
    streams: tuple[Stream, ...]  # stream of each row

    def __len__(self) -> int:
        return len(self.streams)

    def count(self, stream: Stream) -> int:
        return self.streams.count(stream)


class DecoderModel(Module):
    def __init__(self, cfg: DecoderConfig | None = None) -> None:
        cfg = cfg or DecoderConfig()
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        self.patch_embed = PatchEmbed(cfg.channels, cfg.grid, cfg.patch, cfg.embed, rng)
        self.object_proj = Linear(cfg.object_width, cfg.embed, rng)
        self.map_proj = Linear(cfg.map_width, cfg.embed, rng)
        self.command_proj = Linear(cfg.command_width, cfg.embed, rng)
        self.stream_embed = Parameter(
            rng.normal(0.0, 0.02, size=(len(Stream), cfg.embed)), "stream_embed"
        )
        self.queries = Parameter(
            rng.normal(0.0, 1.0, size=(cfg.num_queries, cfg.embed)), "queries"
        )
        self.cross_attn = MultiHeadAttention(cfg.embed, cfg.heads, rng)
        self.norm = LayerNorm(cfg.embed)
        self.traj_heads = [
            MLP([cfg.embed, *cfg.head_hidden, cfg.output_width], rng)
            for _ in range(cfg.num_queries)
        ]
        self.pool_query = Parameter(rng.normal(0.0, 1.0, size=(1, cfg.embed)), "pool_query")
        self.pool_attn = MultiHeadAttention(cfg.embed, cfg.heads, rng)
        self.pool_norm = LayerNorm(cfg.embed)


def _check_width(name: str, arr: FloatArray, width: int) -> None:
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ShapeError(f"{name} tokens have shape {arr.shape}, expected (n, {width})")


def encode_streams(g: Graph, p: PerceptionBundle, m: DecoderModel) -> Tokens:
    """Project every enabled stream to ``embed`` wide tokens tagged by stream type."""
    cfg = m.cfg
    expected_bev = (cfg.channels, cfg.grid, cfg.grid)
    if p.bev.shape != expected_bev:
        raise ShapeError(f"bev raster {p.bev.shape}, expected {expected_bev}")
    _check_width("object", p.object_tokens, cfg.object_width)
    _check_width("map", p.map_tokens, cfg.map_width)
    if p.command_token.shape != (cfg.command_width,):
        raise ShapeError(f"command token {p.command_token.shape}")

    blocks: list[Tensor2] = []
    tags: list[Stream] = []
    for stream in Stream:
        if stream not in cfg.streams:
            continue
        match stream:
            case Stream.BEV:
                block = m.patch_embed(g, p.bev)
            case Stream.OBJECTS if len(p.object_tokens):
                block = m.object_proj(g, g.constant(p.object_tokens))
            case Stream.MAP if len(p.map_tokens):
                block = m.map_proj(g, g.constant(p.map_tokens))
            case Stream.COMMAND:
                block = m.command_proj(g, g.constant(p.command_token[None, :]))
            case _:
                continue
        type_row = g.select_rows(m.stream_embed, [list(Stream).index(stream)])
        blocks.append(g.add_bias(block, type_row))
        tags.extend([stream] * block.rows)
    if not blocks:
        return Tokens(None, ())
    return Tokens(g.concat_rows(blocks) if len(blocks) > 1 else blocks[0], tuple(tags))


def decode_anchors(
    g: Graph, tokens: Tokens, m: DecoderModel
) -> tuple[Tensor2, list[FloatArray]]:
    """(num_queries, 2H) dynamic anchors and the per-head attention weights.

    With no tokens the queries pass straight to the heads.
    """
    q = m.queries
    weights: list[FloatArray] = []
    if tokens.values is not None:
        attended, weights = m.cross_attn(g, q, tokens.values)
        q = g.add(q, attended)
    h = m.norm(g, q)
    rows = [
        head(g, g.select_rows(h, [j])) for j, head in enumerate(m.traj_heads)
    ]
    return g.scale(g.concat_rows(rows), m.cfg.traj_scale), weights


def pool_context(g: Graph, tokens: Tokens, m: DecoderModel) -> Tensor2:
    """(1, embed) condition vector: a learned query attending over all tokens."""
    q = m.pool_query
    if tokens.values is not None:
        attended, _ = m.pool_attn(g, q, tokens.values)
        q = g.add(q, attended)
    return m.pool_norm(g, q)


def smoothed_ade(g: Graph, trajectories: Tensor2, target: FlatTrajectory) -> Tensor2:
    """(K, 1) average displacement of each row against ``target``.

    Distances use sqrt(d^2 + eps^2) - eps so the gradient exists at zero.
    """
    k, width = trajectories.shape
    tgt = np.asarray(target, dtype=np.float64).reshape(1, -1)
    if tgt.shape[1] != width:
        raise ShapeError(f"target width {tgt.shape[1]}, trajectories {width}")
    horizon = width // 2
    diff = g.sub(trajectories, g.constant(np.repeat(tgt, k, axis=0)))
    squared = g.reshape(g.mul(diff, diff), k * horizon, 2)
    dist = g.reshape(g.sqrt_eps(g.sum_cols(squared)), k, horizon)
    return g.scale(g.sum_cols(dist), 1.0 / horizon)


def decoder_loss(
    g: Graph, anchors: Tensor2, expert: FlatTrajectory, gamma: float = 0.01
) -> Tensor2:
    """Winner-takes-all: best head's ade plus ``gamma`` times the mean head ade."""
    ades = smoothed_ade(g, anchors, expert)
    winner = int(np.argmin(ades.data[:, 0]))
    return g.add(g.select_rows(ades, [winner]), g.scale(g.mean_all(ades), gamma))


def stream_prefixes() -> list[StreamSet]:
    """Cumulative stream sets: none, BEV, +objects, +map, +command."""
    order: Sequence[Stream] = ALL_STREAMS
    return [tuple(order[:i]) for i in range(len(order) + 1)]
