from enum import StrEnum, auto

import numpy as np

from anchorplan.anchors.vocab import StaticVocabulary
from anchorplan.world.models import Template

from ._base import BaseDoc, Rows

FORMAT_VERSION = 1


class Split(StrEnum):
    TRAIN = auto()
    EVAL = auto()


class ManifestEntry(BaseDoc):
    id: str
    template: Template
    split: Split
    seed: int
    file: str


class DatasetManifest(BaseDoc):
    version: int = FORMAT_VERSION
    config_hash: str
    entries: list[ManifestEntry]

    def ids(self, split: Split | None = None) -> list[str]:
        return [e.id for e in self.entries if split is None or e.split == split]


class VocabularyDoc(BaseDoc):
    version: int = FORMAT_VERSION
    k: int
    seed: int
    inertia: float
    history: list[float]
    corpus_hash: str
    anchors: Rows

    @classmethod
    def from_domain(cls, v: StaticVocabulary) -> "VocabularyDoc":
        return cls.model_validate(v, from_attributes=True)

    def to_domain(self) -> StaticVocabulary:
        return StaticVocabulary(
            np.array(self.anchors, dtype=np.float64),
            self.inertia,
            self.seed,
            tuple(self.history),
            self.corpus_hash,
        )


class CheckpointMeta(BaseDoc):
    version: int = FORMAT_VERSION
    config_hash: str
    vocab_sha256: str
    epochs: int
    losses: list[float]
