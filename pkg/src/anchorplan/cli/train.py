import logging
from typing import Annotated

import typer

from anchorplan.bench.pipeline import train_models, training_samples
from anchorplan.schemas.artifacts import CheckpointMeta, Split
from anchorplan.store.operations import MANIFEST_NAME, load_scenarios, save_models
from anchorplan.store.utils import artifact_lock
from anchorplan.utils.digest import sha256_file

from .deps import catch_cli_errors, get_config, load_vocab, require

logger = logging.getLogger("anchorplan")


@catch_cli_errors
def train(
    epochs: Annotated[int | None, typer.Option(help="Override train.epochs.")] = None,
    progress: Annotated[bool, typer.Option(help="Show batch progress.")] = True,
) -> None:
    """Jointly train decoder, denoiser and confidence head; writes the checkpoint."""
    cfg = get_config()
    require(cfg.paths.dataset / MANIFEST_NAME, "dataset manifest")
    vocab = load_vocab(cfg)
    samples = training_samples(load_scenarios(cfg.paths.dataset, Split.TRAIN), cfg)
    logger.info("training on %d scenarios, config %s", len(samples), cfg.config_hash())
    models, history = train_models(cfg, vocab, samples, epochs=epochs, progress=progress)
    meta = CheckpointMeta(
        config_hash=cfg.config_hash(),
        vocab_sha256=sha256_file(cfg.paths.vocab),
        epochs=len(history),
        losses=[h.loss for h in history],
    )
    with artifact_lock(cfg.paths.checkpoint.parent):
        digest = save_models(cfg.paths.checkpoint, models, meta)
    logger.info("checkpoint %s sha256 %s", cfg.paths.checkpoint, digest)
    final = f", final loss {history[-1].loss:.5f}" if history else ""
    typer.echo(f"{len(history)} epochs{final}; checkpoint {cfg.paths.checkpoint}")
