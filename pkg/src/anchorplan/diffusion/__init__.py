from .denoiser import ConfidenceHead, Denoiser, DenoiserConfig
from .policy import PlannerModels, SceneEncoding, anchor_set, encode_scene, plan
from .sampler import (
    CandidateScorer,
    InitMode,
    NoisePredictor,
    PlannerConfig,
    PlanResult,
    reverse_timesteps,
    select,
    truncated_sample,
)
from .schedule import (
    NoiseSchedule,
    ScheduleKind,
    cosine_schedule,
    forward_noise,
    linear_schedule,
    make_schedule,
    timestep_embedding,
)
from .training import (
    EpochStats,
    LossParts,
    TrainConfig,
    Trainer,
    TrainingDraws,
    TrainingSample,
    make_draws,
    sample_loss,
    train_step,
)

__all__ = [
    "CandidateScorer",
    "ConfidenceHead",
    "Denoiser",
    "DenoiserConfig",
    "EpochStats",
    "InitMode",
    "LossParts",
    "NoisePredictor",
    "NoiseSchedule",
    "PlanResult",
    "PlannerConfig",
    "PlannerModels",
    "SceneEncoding",
    "ScheduleKind",
    "TrainConfig",
    "Trainer",
    "TrainingDraws",
    "TrainingSample",
    "anchor_set",
    "cosine_schedule",
    "encode_scene",
    "forward_noise",
    "linear_schedule",
    "make_draws",
    "make_schedule",
    "plan",
    "reverse_timesteps",
    "sample_loss",
    "select",
    "timestep_embedding",
    "train_step",
    "truncated_sample",
]
