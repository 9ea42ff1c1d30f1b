import functools
import json
import logging
from collections.abc import Callable
from pathlib import Path

import typer
from pydantic import ValidationError

from anchorplan.anchors.vocab import StaticVocabulary
from anchorplan.config import RunConfig
from anchorplan.diffusion.policy import PlannerModels
from anchorplan.errors import AnchorPlanError, ConfigError, MissingPrerequisiteError
from anchorplan.store.operations import load_models, read_vocabulary
from anchorplan.typ import P, T

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"

logger = logging.getLogger("anchorplan")

# set by the app callback before any verb runs
run_config: RunConfig | None = None


def configure_logging(level: str) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.handlers[:] = [handler]
    logger.setLevel(level.upper())
    logger.propagate = False


def get_config() -> RunConfig:
    if run_config is None:
        raise RuntimeError("run config is not loaded")
    return run_config


def require(path: Path, what: str) -> Path:
    if not path.exists():
        raise MissingPrerequisiteError(f"{what} not found at {path}")
    return path


def _fail(kind: str, code: int, message: str) -> typer.Exit:
    typer.echo(json.dumps({"error": kind, "code": code, "message": message}), err=True)
    return typer.Exit(code)


def catch_cli_errors(func: Callable[P, T]) -> Callable[P, T]:
    """One JSON error line on stderr and the mapped exit status for every failure."""

    @functools.wraps(func)
    def wrapped(*args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return func(*args, **kwargs)
        except AnchorPlanError as e:
            raise _fail(e.kind, e.exit_code, str(e)) from e
        except ValidationError as e:
            raise _fail(ConfigError.kind, ConfigError.exit_code, str(e)) from e
        except FloatingPointError as e:
            raise _fail("numeric_failure", 4, str(e)) from e
        except ValueError as e:
            raise _fail("invalid_input", ConfigError.exit_code, str(e)) from e

    return wrapped


def load_vocab(cfg: RunConfig) -> StaticVocabulary:
    return read_vocabulary(require(cfg.paths.vocab, "vocabulary"))


def load_planner(cfg: RunConfig) -> PlannerModels:
    """Models from the run checkpoint, which must match the run vocabulary file."""
    models = PlannerModels.create(cfg.decoder, cfg.denoiser)
    meta = load_models(
        require(cfg.paths.checkpoint, "checkpoint"),
        models,
        require(cfg.paths.vocab, "vocabulary"),
    )
    if meta.config_hash != cfg.config_hash():
        logger.warning(
            "checkpoint was trained under config %s, running with %s",
            meta.config_hash[:12], cfg.config_hash()[:12],
        )
    return models
