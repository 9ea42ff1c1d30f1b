from pathlib import Path
from typing import Annotated

import typer

from anchorplan.config import load_run_config, settings

from . import data, deps, evaluate, render, train
from .deps import catch_cli_errors, configure_logging

__all__ = ["app", "deps"]

app = typer.Typer(
    name="anchorplan",
    help="Anchor-bootstrapped truncated-diffusion planner: data, training and benchmarks.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
@catch_cli_errors
def main(
    config: Annotated[Path | None, typer.Option(help="JSON run config.")] = None,
    seed: Annotated[int | None, typer.Option(help="Override the run seed.")] = None,
    out: Annotated[Path | None, typer.Option(help="Artifact directory.")] = None,
    jobs: Annotated[int | None, typer.Option(help="Worker processes.")] = None,
    log_level: Annotated[str, typer.Option(help="Logging level.")] = settings.log_level,
) -> None:
    configure_logging(log_level)
    deps.run_config = load_run_config(config, seed=seed, out_dir=out, jobs=jobs)


app.command("gen-data")(data.gen_data)
app.command("build-vocab")(data.build_vocab)
app.command("train")(train.train)
app.command("eval")(evaluate.eval_)
app.command("ablate")(evaluate.ablate)
app.command("report")(evaluate.report)
app.command("render")(render.render)
