import logging
from pathlib import Path
from typing import Annotated

import numpy as np
import typer

from anchorplan.bench.ablation import TIMING_COLUMN, AblationAxis, heads_table, steps_table
from anchorplan.bench.evaluate import evaluate_scenarios, mean_extra, per_template
from anchorplan.bench.pipeline import training_samples
from anchorplan.diffusion.sampler import InitMode
from anchorplan.errors import MissingPrerequisiteError
from anchorplan.metrics.epdms import HEADER, corpus_epdms
from anchorplan.schemas.artifacts import Split
from anchorplan.store.operations import (
    MANIFEST_NAME,
    SUMMARY_ID,
    load_scenarios,
    read_table,
    write_report,
    write_table,
)
from anchorplan.store.utils import artifact_lock
from anchorplan.utils.misc import fmt_float

from .deps import catch_cli_errors, get_config, load_planner, load_vocab, require

logger = logging.getLogger("anchorplan")


@catch_cli_errors
def eval_(
    init: Annotated[
        InitMode, typer.Option(help="Candidate initialization: hybrid anchors, static only or noise.")
    ] = InitMode.ANCHORS,
    expert: Annotated[
        bool, typer.Option("--expert", help="Score the expert trajectories, bypassing the planner.")
    ] = False,
    steps: Annotated[int | None, typer.Option(help="Override planner.steps.")] = None,
    split: Annotated[Split, typer.Option(help="Dataset split to score.")] = Split.EVAL,
) -> None:
    """Plan every scenario of a split and write the per-scenario EPDMS report."""
    cfg = get_config()
    require(cfg.paths.dataset / MANIFEST_NAME, "dataset manifest")
    scenarios = load_scenarios(cfg.paths.dataset, split)
    if not scenarios:
        raise MissingPrerequisiteError(f"dataset has no {split.value} scenarios")
    if expert:
        reports = evaluate_scenarios(scenarios, cfg, expert=True)
        name = f"eval-{split.value}-expert.csv"
    else:
        vocab = load_vocab(cfg)
        models = load_planner(cfg)
        reports = evaluate_scenarios(
            scenarios, cfg, models, vocab, mode=init, steps=steps
        )
        name = f"eval-{split.value}-{init.value}.csv"
        logger.info("mean ade to expert %.4f m", mean_extra(reports, "ade"))
    summary = corpus_epdms(reports)
    for template, score in per_template(reports).items():
        logger.info("%s EPDMS %.4f over %d scenarios", template, score.epdms, score.count)
    path = cfg.paths.reports / name
    with artifact_lock(cfg.paths.reports):
        digest = write_report(path, reports, summary)
    logger.info("report %s sha256 %s", path, digest)
    typer.echo(f"EPDMS {summary.epdms:.4f} over {summary.count} scenarios; report {path}")


@catch_cli_errors
def ablate(
    axis: Annotated[AblationAxis, typer.Option(help="Denoising steps or decoder input streams.")],
    progress: Annotated[bool, typer.Option(help="Show batch progress while retraining.")] = True,
) -> None:
    """Write an ablation table over step counts or cumulative decoder streams."""
    cfg = get_config()
    require(cfg.paths.dataset / MANIFEST_NAME, "dataset manifest")
    vocab = load_vocab(cfg)
    scenarios = load_scenarios(cfg.paths.dataset, Split.EVAL)
    match axis:
        case AblationAxis.STEPS:
            header, rows = steps_table(load_planner(cfg), vocab, scenarios, cfg)
        case AblationAxis.HEADS:
            train = training_samples(load_scenarios(cfg.paths.dataset, Split.TRAIN), cfg)
            header, rows = heads_table(vocab, train, scenarios, cfg, progress)
    path = cfg.paths.reports / f"ablate-{axis.value}.csv"
    with artifact_lock(cfg.paths.reports):
        digest = write_table(path, header, rows, volatile=(TIMING_COLUMN,))
    logger.info("ablation table %s sha256 %s (timing excluded)", path, digest)
    timed = TIMING_COLUMN in header
    for row in rows:
        line = f"{row[0]}: EPDMS {float(row[-1]):.4f}"
        if timed:
            line += f" in {float(row[header.index(TIMING_COLUMN)]):.1f} ms/plan"
        typer.echo(line)


@catch_cli_errors
def report(
    path: Annotated[Path, typer.Argument(help="Report CSV written by eval.")],
    by_template: Annotated[bool, typer.Option(help="One summary row per template.")] = False,
) -> None:
    """Print the corpus summary row of a report CSV."""
    rows = [r for r in read_table(require(path, "report")) if r["scenario_id"] != SUMMARY_ID]
    if not rows:
        raise ValueError(f"{path} has no scenario rows")
    groups: dict[str, list[dict[str, str]]] = {"all": rows}
    if by_template:
        groups = {}
        for r in rows:
            groups.setdefault(r["template"], []).append(r)
    typer.echo(",".join(("group", "count", *HEADER)))
    for name, group in sorted(groups.items()):
        means = [np.mean([float(r[c]) for r in group]) for c in HEADER]
        typer.echo(",".join((name, str(len(group)), *map(fmt_float, means))))
