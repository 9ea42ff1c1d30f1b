import functools
import json
from collections.abc import Callable
from pathlib import Path
from typing import Concatenate

from pydantic import ValidationError

from anchorplan.errors import AnchorPlanError, ConfigError, MissingPrerequisiteError
from anchorplan.typ import P, T

from .utils import artifact_lock


def catch_store_errors(
    func: Callable[Concatenate[Path, P], T],
) -> Callable[Concatenate[Path, P], T]:
    """Turn file-level failures on ``path`` into command-line errors."""

    @functools.wraps(func)
    def wrapped(path: Path, *args: P.args, **kwargs: P.kwargs) -> T:
        try:
            return func(path, *args, **kwargs)
        except FileNotFoundError as e:
            raise MissingPrerequisiteError(f"{path}: {e.strerror or e}") from e
        except (ValidationError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError(f"{path} is malformed: {e}") from e
        except OSError as e:
            raise AnchorPlanError(f"{path}: {e}") from e

    return wrapped


def locked(
    func: Callable[Concatenate[Path, P], T],
) -> Callable[Concatenate[Path, P], T]:
    """Run ``func(directory, ...)`` while holding the directory's artifact lock."""

    @functools.wraps(func)
    def wrapped(directory: Path, *args: P.args, **kwargs: P.kwargs) -> T:
        with artifact_lock(directory):
            return func(directory, *args, **kwargs)

    return wrapped
