from .vocab import (
    AnchorSet,
    Provenance,
    StaticVocabulary,
    build_vocabulary,
    fuse,
    kmeans,
    nearest_anchor,
)

__all__ = [
    "AnchorSet",
    "Provenance",
    "StaticVocabulary",
    "build_vocabulary",
    "fuse",
    "kmeans",
    "nearest_anchor",
]
