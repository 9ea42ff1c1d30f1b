import functools
import logging
from collections.abc import Sequence
from typing import NamedTuple

from anchorplan.anchors.vocab import StaticVocabulary, build_vocabulary
from anchorplan.config import RunConfig
from anchorplan.core.traj import to_local, unflatten
from anchorplan.decoder.model import Stream
from anchorplan.diffusion.policy import PlannerModels
from anchorplan.diffusion.schedule import make_schedule
from anchorplan.diffusion.training import EpochStats, Trainer, TrainingSample
from anchorplan.schemas.artifacts import Split
from anchorplan.typ import FlatTrajectory
from anchorplan.utils.decos import parallel_map
from anchorplan.utils.digest import derive_seed, sha256_json
from anchorplan.world.generate import generate_scenario
from anchorplan.world.models import Scenario, Template, WorldConfig
from anchorplan.world.perception import extract_perception

logger = logging.getLogger("anchorplan")


class ScenarioSpec(NamedTuple):
    id: str
    template: Template
    split: Split
    seed: int


def scenario_specs(cfg: RunConfig) -> list[ScenarioSpec]:
    """Train then eval entries per template, each with a seed derived from the run seed."""
    counts = {
        Split.TRAIN: cfg.data.train_per_template,
        Split.EVAL: cfg.data.eval_per_template,
    }
    return [
        ScenarioSpec(
            f"{template.value}-{split.value}-{i:04d}",
            template,
            split,
            derive_seed(cfg.seed, template.value, split.value, i),
        )
        for template in Template
        for split, n in counts.items()
        for i in range(n)
    ]


def _generate_one(world: WorldConfig, spec: ScenarioSpec) -> Scenario:
    return generate_scenario(spec.seed, spec.template, world, spec.id)


def generate_dataset(cfg: RunConfig) -> list[tuple[Scenario, Split]]:
    specs = scenario_specs(cfg)
    scenarios = parallel_map(
        functools.partial(_generate_one, cfg.world), specs, cfg.jobs
    )
    return [(s, spec.split) for s, spec in zip(scenarios, specs, strict=True)]


def local_expert(s: Scenario) -> FlatTrajectory:
    """The expert trajectory flattened in the ego start frame, the planner's frame."""
    return to_local(s.expert, s.ego_start)


def corpus_hash(scenarios: Sequence[Scenario]) -> str:
    return sha256_json([[s.id, local_expert(s).tolist()] for s in scenarios])


def build_static_vocab(scenarios: Sequence[Scenario], cfg: RunConfig) -> StaticVocabulary:
    if not scenarios:
        raise ValueError("vocabulary needs at least one training scenario")
    trajectories = [unflatten(local_expert(s), cfg.world.dt) for s in scenarios]
    vocab = build_vocabulary(
        trajectories,
        cfg.planner.k_static,
        cfg.planner.vocab_seed,
        corpus_hash(scenarios),
    )
    logger.info(
        "clustered %d expert trajectories into %d anchors, inertia %.4f",
        len(trajectories), vocab.k, vocab.inertia,
    )
    return vocab


def _sample_one(world: WorldConfig, s: Scenario) -> TrainingSample:
    return TrainingSample(s.id, extract_perception(s, world), local_expert(s))


def training_samples(scenarios: Sequence[Scenario], cfg: RunConfig) -> list[TrainingSample]:
    return parallel_map(functools.partial(_sample_one, cfg.world), scenarios, cfg.jobs)


def train_models(
    cfg: RunConfig,
    vocab: StaticVocabulary,
    samples: Sequence[TrainingSample],
    *,
    streams: Sequence[Stream] | None = None,
    epochs: int | None = None,
    progress: bool = True,
) -> tuple[PlannerModels, list[EpochStats]]:
    """Fresh models trained on ``samples``; ``streams`` overrides the decoder's inputs."""
    decoder_cfg = cfg.decoder
    if streams is not None:
        decoder_cfg = decoder_cfg.model_copy(update={"streams": tuple(streams)})
    models = PlannerModels.create(decoder_cfg, cfg.denoiser)
    trainer = Trainer(
        models,
        vocab,
        cfg.planner,
        make_schedule(cfg.planner.schedule, cfg.planner.T),
        cfg.train,
    )
    history = trainer.fit(samples, epochs, progress)
    return models, history
