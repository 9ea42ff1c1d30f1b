import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from anchorplan.errors import ShapeError
from anchorplan.typ import FlatTrajectory, FloatArray

_MAX_BETA = 0.999


class ScheduleKind(StrEnum):
    COSINE = "cosine"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    kind: ScheduleKind
    alpha_bar: FloatArray  # (T + 1,), alpha_bar[0] == 1

    def __post_init__(self) -> None:
        ab = np.array(self.alpha_bar, dtype=np.float64)
        if ab.ndim != 1 or len(ab) < 2 or ab[0] != 1.0:
            raise ValueError("alpha_bar must start at 1 and cover t = 0..T")
        if not (np.all(np.diff(ab) < 0) and np.all(ab > 0)):
            raise ValueError("alpha_bar must be positive and strictly decreasing")
        ab.setflags(write=False)
        object.__setattr__(self, "alpha_bar", ab)

    @property
    def steps(self) -> int:
        return len(self.alpha_bar) - 1

    def signal(self, t: int) -> float:
        return math.sqrt(self.alpha_bar[self._check(t)])

    def noise(self, t: int) -> float:
        return math.sqrt(1.0 - self.alpha_bar[self._check(t)])

    def _check(self, t: int) -> int:
        if not 0 <= t <= self.steps:
            raise ValueError(f"timestep {t} outside [0, {self.steps}]")
        return int(t)


def _from_betas(kind: ScheduleKind, betas: FloatArray) -> NoiseSchedule:
    ab = np.concatenate([[1.0], np.cumprod(1.0 - np.clip(betas, 0.0, _MAX_BETA))])
    return NoiseSchedule(kind, ab)


def cosine_schedule(steps: int, s: float = 0.008) -> NoiseSchedule:
    """Squared-cosine cumulative signal curve, betas capped at 0.999."""
    t = np.arange(steps + 1, dtype=np.float64) / steps
    f = np.cos((t + s) / (1.0 + s) * math.pi / 2.0) ** 2
    ab = f / f[0]
    return _from_betas(ScheduleKind.COSINE, 1.0 - ab[1:] / ab[:-1])


def linear_schedule(
    steps: int, beta_start: float = 1e-4, beta_end: float = 0.02
) -> NoiseSchedule:
    """Linear betas, rescaled so short chains still end near pure noise."""
    scale = 1000.0 / steps
    betas = np.linspace(beta_start * scale, beta_end * scale, steps)
    return _from_betas(ScheduleKind.LINEAR, betas)


def make_schedule(kind: ScheduleKind | str, steps: int) -> NoiseSchedule:
    match ScheduleKind(kind):
        case ScheduleKind.COSINE:
            return cosine_schedule(steps)
        case ScheduleKind.LINEAR:
            return linear_schedule(steps)


def forward_noise(
    schedule: NoiseSchedule, tau0: FlatTrajectory, t: int, eps: FloatArray
) -> FloatArray:
    """tau_t = sqrt(abar_t) * tau0 + sqrt(1 - abar_t) * eps."""
    x0 = np.asarray(tau0, dtype=np.float64)
    e = np.asarray(eps, dtype=np.float64)
    if x0.shape != e.shape:
        raise ShapeError(f"signal {x0.shape} and noise {e.shape} differ")
    return schedule.signal(t) * x0 + schedule.noise(t) * e


def timestep_embedding(t: int | float, width: int = 16) -> FloatArray:
    """Sinusoidal embedding (sin half, then cos half) of a scalar timestep."""
    half = width // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half, 1))
    angles = float(t) * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])
