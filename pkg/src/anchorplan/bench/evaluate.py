import functools
import logging
import time
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import replace
from typing import NamedTuple

import numpy as np

from anchorplan.anchors.vocab import Provenance, StaticVocabulary
from anchorplan.config import RunConfig
from anchorplan.core.traj import Trajectory, ade, to_global
from anchorplan.diffusion.policy import PlannerModels, plan
from anchorplan.diffusion.sampler import InitMode, PlanResult
from anchorplan.metrics.epdms import CorpusScore, corpus_epdms, evaluate
from anchorplan.metrics.models import EpdmsReport
from anchorplan.utils.decos import parallel_map
from anchorplan.utils.digest import derive_seed
from anchorplan.world.models import Scenario
from anchorplan.world.perception import extract_perception

logger = logging.getLogger("anchorplan")


class ScenarioPlan(NamedTuple):
    scenario: Scenario
    result: PlanResult  # ego start frame
    trajectory: Trajectory  # selected candidate, world frame
    seconds: float  # wall time of the plan call


def plan_scenario(
    models: PlannerModels,
    vocab: StaticVocabulary,
    s: Scenario,
    cfg: RunConfig,
    *,
    mode: InitMode = InitMode.ANCHORS,
    steps: int | None = None,
) -> ScenarioPlan:
    bundle = extract_perception(s, cfg.world)
    start = time.perf_counter()
    result = plan(
        models,
        vocab,
        bundle,
        cfg.planner,
        seed=derive_seed(cfg.planner.sample_seed, s.id),
        mode=mode,
        steps=steps,
        dt=cfg.world.dt,
    )
    seconds = time.perf_counter() - start
    selected = to_global(result.candidates[result.selected], s.ego_start, cfg.world.dt)
    return ScenarioPlan(s, result, selected, seconds)


def _score_plan(
    models: PlannerModels,
    vocab: StaticVocabulary,
    cfg: RunConfig,
    mode: InitMode,
    steps: int | None,
    s: Scenario,
) -> EpdmsReport:
    p = plan_scenario(models, vocab, s, cfg, mode=mode, steps=steps)
    report = evaluate(p.trajectory, s, cfg.epdms)
    extras = {
        "ade": ade(p.trajectory, s.expert),
        "dynamic_selected": float(p.result.selected_provenance == Provenance.DYNAMIC),
        "plan_ms": 1e3 * p.seconds,
    }
    return replace(report, extras=extras)


def _score_expert(cfg: RunConfig, s: Scenario) -> EpdmsReport:
    return evaluate(s.expert, s, cfg.epdms)


def evaluate_scenarios(
    scenarios: Sequence[Scenario],
    cfg: RunConfig,
    models: PlannerModels | None = None,
    vocab: StaticVocabulary | None = None,
    *,
    mode: InitMode = InitMode.ANCHORS,
    steps: int | None = None,
    expert: bool = False,
) -> list[EpdmsReport]:
    """Score the planner on every scenario, or the expert itself with ``expert=True``."""
    if expert:
        fn = functools.partial(_score_expert, cfg)
    else:
        if models is None or vocab is None:
            raise ValueError("planner evaluation needs models and a vocabulary")
        fn = functools.partial(_score_plan, models, vocab, cfg, mode, steps)
    reports = parallel_map(fn, scenarios, cfg.jobs)
    if reports:
        logger.info(
            "evaluated %d scenarios (%s), mean EPDMS %.4f",
            len(reports),
            "expert" if expert else f"init={mode.value}",
            corpus_epdms(reports).epdms,
        )
    return reports


def per_template(reports: Sequence[EpdmsReport]) -> dict[str, CorpusScore]:
    groups: dict[str, list[EpdmsReport]] = defaultdict(list)
    for r in reports:
        groups[r.template].append(r)
    return {k: corpus_epdms(v) for k, v in sorted(groups.items())}


def mean_extra(reports: Sequence[EpdmsReport], key: str) -> float:
    return float(np.mean([r.extras[key] for r in reports]))
