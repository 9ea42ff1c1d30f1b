import os
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from anchorplan.errors import LockHeldError

LOCK_NAME = ".lock"


@contextmanager
def artifact_lock(directory: Path) -> Iterator[Path]:
    """Hold ``<directory>/.lock`` for the duration; one writer per directory."""
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise LockHeldError(f"{directory} is locked by another command ({lock})") from e
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield directory
    finally:
        lock.unlink(missing_ok=True)


def write_atomic(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    if isinstance(data, str):
        tmp.write_text(data, encoding="utf-8", newline="\n")
    else:
        tmp.write_bytes(data)
    os.replace(tmp, path)
