from dataclasses import dataclass
from enum import StrEnum
from itertools import pairwise
from typing import Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from anchorplan.anchors.vocab import AnchorSet, Provenance
from anchorplan.core.traj import Trajectory, unflatten
from anchorplan.errors import CountMismatchError
from anchorplan.typ import FloatArray, IntArray

from .schedule import NoiseSchedule, ScheduleKind


class InitMode(StrEnum):
    ANCHORS = "anchors"  # hybrid: dynamic + static
    STATIC = "static"  # static vocabulary only
    NOISE = "noise"  # zero anchors, start from t = T


class PlannerConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    T: int = Field(100, ge=1)
    t_trunc: int = Field(30, ge=1)
    steps: int = Field(2, ge=0)
    schedule: ScheduleKind = ScheduleKind.COSINE
    k_static: int = Field(16, ge=1)
    k_dynamic: int = Field(4, ge=1)
    label_sigma: float = Field(0.5, gt=0)
    # predicted clean residuals are clipped to this many metres per coordinate
    clip_residual: float = Field(50.0, gt=0)
    vocab_seed: int = 0
    sample_seed: int = 0

    @model_validator(mode="after")
    def _check_steps(self) -> "PlannerConfig":
        if self.t_trunc > self.T:
            raise ValueError("t_trunc must not exceed T")
        if self.steps > self.t_trunc:
            raise ValueError("steps must not exceed t_trunc")
        return self


class NoisePredictor(Protocol):
    def predict_noise(
        self, state: FloatArray, anchors: FloatArray, t: int, context: FloatArray
    ) -> FloatArray: ...


class CandidateScorer(Protocol):
    def score(self, candidates: FloatArray, context: FloatArray) -> FloatArray: ...


@dataclass(frozen=True, eq=False)
class PlanResult:
    anchors: FloatArray  # (K, 2H) initialization of each candidate
    candidates: FloatArray  # (K, 2H)
    confidences: FloatArray  # (K,)
    selected: int
    provenance: tuple[Provenance, ...]
    dt: float = 0.5
    initial_heading: float = 0.0

    def __post_init__(self) -> None:
        if not (
            len(self.anchors) == len(self.candidates) == len(self.confidences)
            == len(self.provenance)
        ):
            raise CountMismatchError("candidate count must equal anchor count")

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def selected_provenance(self) -> Provenance:
        return self.provenance[self.selected]

    def trajectory(self, index: int | None = None) -> Trajectory:
        """Candidate as a trajectory with recomputed headings (default: selected)."""
        i = self.selected if index is None else index
        return unflatten(self.candidates[i], self.dt, self.initial_heading)


def select(confidences: FloatArray) -> int:
    """argmax with ties to the lowest index."""
    return int(np.argmax(np.asarray(confidences)))


def reverse_timesteps(t_start: int, steps: int) -> IntArray:
    """``steps + 1`` strictly decreasing integer levels from ``t_start`` to 0."""
    if steps == 0:
        return np.array([t_start], dtype=np.int64)
    if steps > t_start:
        raise ValueError(f"cannot take {steps} distinct steps from t={t_start}")
    return np.rint(np.linspace(t_start, 0, steps + 1)).astype(np.int64)


def truncated_sample(
    anchors: AnchorSet | FloatArray,
    context: FloatArray,
    steps: int,
    seed: int,
    *,
    predictor: NoisePredictor,
    scorer: CandidateScorer,
    schedule: NoiseSchedule,
    t_start: int,
    clip_residual: float = 50.0,
    dt: float = 0.5,
    initial_heading: float = 0.0,
) -> PlanResult:
    """Refine every anchor with a few deterministic reverse steps.

    Each anchor starts from a zero residual noised to level ``t_start``; every
    step inverts the noising equation with the predicted noise and re-noises the
    clean estimate to the next level. With ``steps == 0`` the anchors are
    returned untouched.
    """
    if isinstance(anchors, AnchorSet):
        a, provenance = anchors.anchors, anchors.provenance
    else:
        a = np.asarray(anchors, dtype=np.float64)
        provenance = (Provenance.STATIC,) * len(a)
    if steps == 0:
        candidates = a.copy()
    else:
        rng = np.random.default_rng(seed)
        residual = schedule.noise(t_start) * rng.standard_normal(a.shape)
        for t, t_next in pairwise(reverse_timesteps(t_start, steps)):
            eps = predictor.predict_noise(a + residual, a, int(t), context)
            clean = (residual - schedule.noise(int(t)) * eps) / schedule.signal(int(t))
            clean = np.clip(clean, -clip_residual, clip_residual)
            residual = (
                schedule.signal(int(t_next)) * clean + schedule.noise(int(t_next)) * eps
            )
        candidates = a + residual
    confidences = np.asarray(scorer.score(candidates, context), dtype=np.float64)
    return PlanResult(
        anchors=a.copy(),
        candidates=candidates,
        confidences=confidences,
        selected=select(confidences),
        provenance=tuple(provenance),
        dt=dt,
        initial_heading=initial_heading,
    )
