import logging
from typing import Annotated

import typer

from anchorplan.bench.evaluate import plan_scenario
from anchorplan.bench.render import render_plan, render_vocabulary
from anchorplan.diffusion.sampler import InitMode
from anchorplan.store.operations import MANIFEST_NAME, load_scenarios
from anchorplan.store.utils import artifact_lock, write_atomic
from anchorplan.utils.digest import sha256_bytes

from .deps import catch_cli_errors, get_config, load_planner, load_vocab, require

logger = logging.getLogger("anchorplan")

VOCAB_RENDER = "vocab.svg"


@catch_cli_errors
def render(
    scenario_id: Annotated[
        str | None, typer.Option(help="Scenario id from the dataset manifest.")
    ] = None,
    init: Annotated[InitMode, typer.Option(help="Candidate initialization.")] = InitMode.ANCHORS,
    vocab: Annotated[
        bool, typer.Option("--vocab", help="Draw the static anchor vocabulary instead.")
    ] = False,
) -> None:
    """Draw one planned scenario as SVG, or with ``--vocab`` the static anchors."""
    cfg = get_config()
    if vocab and scenario_id is not None:
        raise ValueError("--vocab takes no --scenario-id")
    if vocab:
        svg = render_vocabulary(load_vocab(cfg))
        name = VOCAB_RENDER
    elif scenario_id is None:
        raise ValueError("pass --scenario-id or --vocab")
    else:
        require(cfg.paths.dataset / MANIFEST_NAME, "dataset manifest")
        (scenario,) = load_scenarios(cfg.paths.dataset, ids=[scenario_id])
        planned = plan_scenario(
            load_planner(cfg), load_vocab(cfg), scenario, cfg, mode=init
        )
        svg = render_plan(scenario, planned.result)
        name = f"{scenario.id}.svg"
    path = cfg.paths.renders / name
    with artifact_lock(cfg.paths.renders):
        write_atomic(path, svg)
    logger.info("render %s sha256 %s", path, sha256_bytes(svg.encode("utf-8")))
    typer.echo(str(path))
