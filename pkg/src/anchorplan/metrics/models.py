from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, field_validator

from anchorplan.world.models import EgoShape


class SubScoreId(StrEnum):
    NC = "NC"  # no at-fault collision
    DAC = "DAC"  # drivable area compliance
    DDC = "DDC"  # driving direction compliance
    TLC = "TLC"  # traffic light compliance
    TTC = "TTC"  # time to collision
    EP = "EP"  # ego progress
    HC = "HC"  # history comfort (acceleration)
    LK = "LK"  # lane keeping
    EC = "EC"  # extended comfort (jerk)


# multiplicative penalties
PENALTIES: tuple[SubScoreId, ...] = (
    SubScoreId.NC,
    SubScoreId.DAC,
    SubScoreId.DDC,
    SubScoreId.TLC,
)
# weighted-average terms
WEIGHTED: tuple[SubScoreId, ...] = (
    SubScoreId.TTC,
    SubScoreId.EP,
    SubScoreId.HC,
    SubScoreId.LK,
    SubScoreId.EC,
)

# report column order; TLC is printed as "TL"
REPORT_ORDER: tuple[SubScoreId, ...] = (
    SubScoreId.NC,
    SubScoreId.DAC,
    SubScoreId.DDC,
    SubScoreId.TLC,
    SubScoreId.EP,
    SubScoreId.TTC,
    SubScoreId.LK,
    SubScoreId.HC,
    SubScoreId.EC,
)
COLUMN_NAMES: dict[SubScoreId, str] = {m: m.value for m in SubScoreId} | {
    SubScoreId.TLC: "TL"
}


def _default_weights() -> dict[SubScoreId, float]:
    return {
        SubScoreId.TTC: 5.0,
        SubScoreId.EP: 5.0,
        SubScoreId.HC: 2.0,
        SubScoreId.LK: 2.0,
        SubScoreId.EC: 2.0,
    }


class EpdmsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    weights: dict[SubScoreId, float] = Field(default_factory=_default_weights)
    ttc_threshold: float = Field(1.0, gt=0)
    ttc_step: float = Field(0.25, gt=0)
    ttc_min_speed: float = Field(0.1, ge=0)
    max_accel: float = Field(4.0, gt=0)
    max_jerk: float = Field(8.0, gt=0)
    max_lateral: float = Field(0.75, gt=0)
    # below this expert progress (metres) EP is not informative and scores 1
    min_progress: float = Field(0.5, gt=0)
    ego: EgoShape = EgoShape()

    @field_validator("weights")
    @classmethod
    def _check_weights(cls, v: dict[SubScoreId, float]) -> dict[SubScoreId, float]:
        if set(v) != set(WEIGHTED):
            raise ValueError(f"weights must cover exactly {[m.value for m in WEIGHTED]}")
        if any(not w > 0 for w in v.values()):
            raise ValueError("weights must be positive")
        return v


@dataclass(frozen=True)
class EpdmsReport:
    scenario_id: str
    agent: Mapping[SubScoreId, float]
    human: Mapping[SubScoreId, float]
    filtered: Mapping[SubScoreId, float]
    epdms: float
    template: str = ""
    extras: Mapping[str, float] = field(default_factory=dict)
