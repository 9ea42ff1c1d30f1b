import logging
from collections import Counter

import typer

from anchorplan.bench.pipeline import build_static_vocab, generate_dataset
from anchorplan.schemas.artifacts import Split
from anchorplan.store.operations import (
    MANIFEST_NAME,
    load_scenarios,
    write_dataset,
    write_vocabulary,
)
from anchorplan.store.utils import artifact_lock
from anchorplan.utils.digest import sha256_file

from .deps import catch_cli_errors, get_config, require

logger = logging.getLogger("anchorplan")


@catch_cli_errors
def gen_data() -> None:
    """Generate train and eval scenarios for every template."""
    cfg = get_config()
    logger.info("gen-data config %s", cfg.config_hash())
    manifest = write_dataset(cfg.paths.dataset, generate_dataset(cfg), cfg.config_hash())
    path = cfg.paths.dataset / MANIFEST_NAME
    logger.info("manifest %s sha256 %s", path, sha256_file(path))
    counts = Counter(e.split.value for e in manifest.entries)
    typer.echo(f"{len(manifest.entries)} scenarios ({dict(sorted(counts.items()))}) in {cfg.paths.dataset}")


@catch_cli_errors
def build_vocab() -> None:
    """Cluster the training split's expert trajectories into the static vocabulary."""
    cfg = get_config()
    require(cfg.paths.dataset / MANIFEST_NAME, "dataset manifest")
    scenarios = load_scenarios(cfg.paths.dataset, Split.TRAIN)
    vocab = build_static_vocab(scenarios, cfg)
    with artifact_lock(cfg.paths.vocab.parent):
        digest = write_vocabulary(cfg.paths.vocab, vocab)
    logger.info("vocabulary %s sha256 %s", cfg.paths.vocab, digest)
    typer.echo(f"{vocab.k} anchors in {cfg.paths.vocab}")
