import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from scipy.spatial.distance import cdist

from anchorplan.core.traj import Trajectory, ade_many, flatten
from anchorplan.errors import CountMismatchError, NumericError, ShapeError
from anchorplan.typ import FlatTrajectory, FloatArray, IntArray

logger = logging.getLogger("anchorplan")

# relative slack for the inertia monotonicity check
_INERTIA_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class StaticVocabulary:
    anchors: FloatArray  # (K_s, 2H)
    inertia: float
    seed: int
    history: tuple[float, ...] = ()
    corpus_hash: str = ""

    def __post_init__(self) -> None:
        arr = np.array(self.anchors, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "anchors", arr)

    @property
    def k(self) -> int:
        return int(self.anchors.shape[0])


def _assign(data: FloatArray, centroids: FloatArray) -> tuple[IntArray, FloatArray]:
    d = cdist(data, centroids, "sqeuclidean")
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(len(data)), labels]


def _plus_plus(data: FloatArray, k: int, rng: np.random.Generator) -> FloatArray:
    centers = [data[rng.integers(len(data))]]
    closest = cdist(data, centers[:1], "sqeuclidean")[:, 0]
    while len(centers) < k:
        total = closest.sum()
        if total <= 0.0:
            raise CountMismatchError("fewer distinct points than clusters")
        idx = int(rng.choice(len(data), p=closest / total))
        centers.append(data[idx])
        closest = np.minimum(closest, cdist(data, data[idx : idx + 1], "sqeuclidean")[:, 0])
    return np.array(centers)


def _lloyd(
    data: FloatArray, centroids: FloatArray, max_iters: int, tol: float
) -> tuple[FloatArray, float, list[float]]:
    history: list[float] = []
    for _ in range(max_iters):
        labels, dist = _assign(data, centroids)
        inertia = float(dist.sum())
        if history and inertia > history[-1] * (1.0 + _INERTIA_SLACK) + _INERTIA_SLACK:
            raise NumericError(f"k-means inertia rose from {history[-1]} to {inertia}")
        history.append(inertia)
        updated = centroids.copy()
        for j in range(len(centroids)):
            members = labels == j
            if members.any():
                updated[j] = data[members].mean(axis=0)
            else:
                # empty cluster: take over the worst-served point
                far = int(np.argmax(dist))
                updated[j] = data[far]
                dist[far] = 0.0
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < tol:
            break
    _, dist = _assign(data, centroids)
    final = float(dist.sum())
    if final > history[-1] * (1.0 + _INERTIA_SLACK) + _INERTIA_SLACK:
        raise NumericError(f"k-means inertia rose from {history[-1]} to {final}")
    history.append(final)
    return centroids, final, history


def kmeans(
    data: FloatArray | Sequence[FlatTrajectory],
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-8,
    n_init: int = 4,
) -> StaticVocabulary:
    """k-means++ seeded Lloyd iterations; the best of ``n_init`` restarts is kept."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected (n, 2H) data, got {x.shape}")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > len(x):
        raise CountMismatchError(f"k={k} exceeds the {len(x)} data points")
    if len(np.unique(x, axis=0)) < k:
        raise CountMismatchError(f"fewer than k={k} distinct data points")
    rng = np.random.default_rng(seed)
    best: tuple[FloatArray, float, list[float]] | None = None
    for _ in range(max(1, n_init)):
        run = _lloyd(x, _plus_plus(x, k, rng), max_iters, tol)
        if best is None or run[1] < best[1]:
            best = run
    assert best is not None
    centroids, inertia, history = best
    logger.debug("k-means k=%d n=%d inertia=%.6f", k, len(x), inertia)
    return StaticVocabulary(centroids, inertia, seed, tuple(history))


def build_vocabulary(
    trajectories: Sequence[Trajectory], k: int, seed: int, corpus_hash: str = "", **kw: int
) -> StaticVocabulary:
    vocab = kmeans(np.stack([flatten(t) for t in trajectories]), k, seed, **kw)
    return StaticVocabulary(
        vocab.anchors, vocab.inertia, vocab.seed, vocab.history, corpus_hash
    )


class Provenance(StrEnum):
    DYNAMIC = "dynamic"
    STATIC = "static"
    # pure-noise baseline: zero anchors with no vocabulary or decoder origin
    NOISE = "noise"


@dataclass(frozen=True, eq=False)
class AnchorSet:
    anchors: FloatArray  # (K, 2H), dynamic rows first
    provenance: tuple[Provenance, ...]

    def __post_init__(self) -> None:
        arr = np.array(self.anchors, dtype=np.float64)
        if arr.ndim != 2 or len(arr) != len(self.provenance):
            raise ShapeError("anchors and provenance tags must align")
        if not np.all(np.isfinite(arr)):
            raise NumericError("anchor coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "anchors", arr)

    def __len__(self) -> int:
        return len(self.provenance)

    @property
    def dynamic_count(self) -> int:
        return self.provenance.count(Provenance.DYNAMIC)

    @property
    def static_count(self) -> int:
        return self.provenance.count(Provenance.STATIC)


def fuse(
    static: StaticVocabulary,
    dynamic: FloatArray | Sequence[FlatTrajectory],
    k_dynamic: int = 4,
    allow_empty: bool = False,
) -> AnchorSet:
    """Dynamic anchors first, then the static vocabulary in its stored order."""
    dyn = np.asarray(dynamic, dtype=np.float64).reshape(-1, static.anchors.shape[1])
    if len(dyn) == 0 and not allow_empty:
        raise CountMismatchError("dynamic anchors are only optional in ablation mode")
    if len(dyn) not in (0, k_dynamic):
        raise CountMismatchError(f"expected {k_dynamic} dynamic anchors, got {len(dyn)}")
    return AnchorSet(
        np.vstack([dyn, static.anchors]),
        (Provenance.DYNAMIC,) * len(dyn) + (Provenance.STATIC,) * static.k,
    )


def nearest_anchor(
    target: FlatTrajectory, anchors: AnchorSet | FloatArray
) -> tuple[int, float]:
    """Index and ade of the closest anchor; ties go to the lowest index."""
    rows = anchors.anchors if isinstance(anchors, AnchorSet) else np.asarray(anchors)
    if len(rows) == 0:
        raise CountMismatchError("anchor set is empty")
    d = ade_many(rows, target)
    idx = int(np.argmin(d))
    return idx, float(d[idx])
