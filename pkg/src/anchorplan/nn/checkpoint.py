"""Flat binary checkpoint of named float64 tensors.

Layout (little endian)::

    b"APCK" | u32 version | u32 meta_len | meta (utf-8 JSON) | u32 count
    count x ( u16 name_len | name | u32 rows | u32 cols | rows*cols f64 )

Tensor names are ``<section>.<parameter path>``.
"""

import json
import logging
import os
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Any, BinaryIO

import numpy as np

from anchorplan.errors import ConfigError, MissingPrerequisiteError
from anchorplan.typ import FloatArray

from .layers import Module

logger = logging.getLogger("anchorplan")

MAGIC = b"APCK"
VERSION = 1


def _read(fp: BinaryIO, fmt: str) -> tuple[Any, ...]:
    size = struct.calcsize(fmt)
    raw = fp.read(size)
    if len(raw) != size:
        raise ConfigError("checkpoint is truncated")
    return struct.unpack(fmt, raw)


def save_checkpoint(
    path: Path, sections: Mapping[str, Module], meta: Mapping[str, Any]
) -> None:
    tensors = [
        (f"{section}.{name}", p.data)
        for section, module in sections.items()
        for name, p in module.named_parameters()
    ]
    meta_raw = json.dumps(dict(meta), sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<II", VERSION, len(meta_raw)))
        fp.write(meta_raw)
        fp.write(struct.pack("<I", len(tensors)))
        for name, data in tensors:
            encoded = name.encode("utf-8")
            fp.write(struct.pack("<H", len(encoded)))
            fp.write(encoded)
            fp.write(struct.pack("<II", *data.shape))
            fp.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
    os.replace(tmp, path)
    logger.debug("wrote %d tensors to %s", len(tensors), path)


def read_checkpoint(path: Path) -> tuple[dict[str, Any], dict[str, FloatArray]]:
    if not path.is_file():
        raise MissingPrerequisiteError(f"checkpoint {path} does not exist")
    tensors: dict[str, FloatArray] = {}
    with path.open("rb") as fp:
        if fp.read(4) != MAGIC:
            raise ConfigError(f"{path} is not a checkpoint")
        version, meta_len = _read(fp, "<II")
        if version != VERSION:
            raise ConfigError(f"checkpoint version {version}, expected {VERSION}")
        meta = json.loads(fp.read(meta_len).decode("utf-8"))
        (count,) = _read(fp, "<I")
        for _ in range(count):
            (name_len,) = _read(fp, "<H")
            name = fp.read(name_len).decode("utf-8")
            rows, cols = _read(fp, "<II")
            raw = fp.read(8 * rows * cols)
            if len(raw) != 8 * rows * cols:
                raise ConfigError("checkpoint is truncated")
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()
    return meta, tensors


def load_checkpoint(path: Path, sections: Mapping[str, Module]) -> dict[str, Any]:
    """Copy stored tensors into the given modules; returns the metadata.

    Missing, unexpected or differently shaped tensors are errors.
    """
    meta, tensors = read_checkpoint(path)
    expected = {
        f"{section}.{name}": p
        for section, module in sections.items()
        for name, p in module.named_parameters()
    }
    if missing := sorted(expected.keys() - tensors.keys()):
        raise ConfigError(f"checkpoint lacks tensors {missing[:5]}")
    if extra := sorted(tensors.keys() - expected.keys()):
        raise ConfigError(f"checkpoint has unexpected tensors {extra[:5]}")
    for name, p in expected.items():
        if tensors[name].shape != p.data.shape:
            raise ConfigError(
                f"{name}: stored shape {tensors[name].shape}, model {p.data.shape}"
            )
    for name, p in expected.items():
        p.data[...] = tensors[name]
    return meta
