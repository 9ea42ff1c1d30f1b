import logging
from collections.abc import Sequence
from enum import StrEnum

from anchorplan.anchors.vocab import StaticVocabulary
from anchorplan.config import RunConfig
from anchorplan.decoder.model import Stream, stream_prefixes
from anchorplan.diffusion.policy import PlannerModels
from anchorplan.diffusion.training import TrainingSample
from anchorplan.metrics.epdms import HEADER, corpus_epdms, summary_row
from anchorplan.utils.misc import fmt_float
from anchorplan.world.models import Scenario

from .evaluate import evaluate_scenarios, mean_extra
from .pipeline import train_models

logger = logging.getLogger("anchorplan")

ABLATION_STEPS = (1, 2, 3, 4, 5)
# mean wall milliseconds per plan call; varies between runs
TIMING_COLUMN = "plan_ms"

_STREAM_LABELS = {
    Stream.BEV: "+BEV",
    Stream.OBJECTS: "+Obj",
    Stream.MAP: "+Map",
    Stream.COMMAND: "+Command",
}


class AblationAxis(StrEnum):
    STEPS = "steps"
    HEADS = "heads"


def stream_label(prefix: Sequence[Stream]) -> str:
    return _STREAM_LABELS[prefix[-1]] if prefix else "none"


def steps_table(
    models: PlannerModels,
    vocab: StaticVocabulary,
    scenarios: Sequence[Scenario],
    cfg: RunConfig,
    steps: Sequence[int] = ABLATION_STEPS,
) -> tuple[tuple[str, ...], list[list[str]]]:
    """One row per reverse step count, same trained models throughout.

    The timing column sits just before EPDMS.
    """
    rows = []
    for n in steps:
        reports = evaluate_scenarios(scenarios, cfg, models, vocab, steps=n)
        *subscores, epdms = summary_row(corpus_epdms(reports))
        rows.append([str(n), *subscores, fmt_float(mean_extra(reports, "plan_ms")), epdms])
    return ("steps", *HEADER[:-1], TIMING_COLUMN, HEADER[-1]), rows


def heads_table(
    vocab: StaticVocabulary,
    train: Sequence[TrainingSample],
    scenarios: Sequence[Scenario],
    cfg: RunConfig,
    progress: bool = True,
) -> tuple[tuple[str, ...], list[list[str]]]:
    """Retrain for each cumulative stream set (none, BEV, +objects, +map, +command)."""
    rows = []
    for prefix in stream_prefixes():
        label = stream_label(prefix)
        logger.info("training with streams %s", [s.value for s in prefix] or "none")
        models, _ = train_models(cfg, vocab, train, streams=prefix, progress=progress)
        reports = evaluate_scenarios(scenarios, cfg, models, vocab)
        rows.append([label, *summary_row(corpus_epdms(reports))])
    return ("heads", *HEADER), rows
