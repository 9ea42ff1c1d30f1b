import csv
import io
import json
import logging
from collections.abc import Collection, Iterable, Sequence
from pathlib import Path

from anchorplan.anchors.vocab import StaticVocabulary
from anchorplan.diffusion.policy import PlannerModels
from anchorplan.errors import ConfigError, MissingPrerequisiteError
from anchorplan.metrics.epdms import HEADER, CorpusScore, report_row, summary_row
from anchorplan.metrics.models import EpdmsReport
from anchorplan.nn.checkpoint import load_checkpoint, save_checkpoint
from anchorplan.schemas.artifacts import (
    CheckpointMeta,
    DatasetManifest,
    ManifestEntry,
    Split,
    VocabularyDoc,
)
from anchorplan.schemas.scenario import ScenarioDoc
from anchorplan.utils.digest import sha256_bytes, sha256_file
from anchorplan.world.models import Scenario

from .decos import catch_store_errors, locked
from .utils import write_atomic

logger = logging.getLogger("anchorplan")

MANIFEST_NAME = "manifest.json"
SUMMARY_ID = "MEAN"


def _dump(doc: DatasetManifest | ScenarioDoc | VocabularyDoc) -> str:
    return doc.model_dump_json(indent=1) + "\n"


@locked
def write_dataset(
    directory: Path,
    scenarios: Iterable[tuple[Scenario, Split]],
    config_hash: str,
) -> DatasetManifest:
    """One JSON file per scenario plus ``manifest.json``; stale files are removed."""
    entries: list[ManifestEntry] = []
    keep = {MANIFEST_NAME}
    for scenario, split in scenarios:
        name = f"{scenario.id}.json"
        write_atomic(
            directory / name,
            _dump(ScenarioDoc.model_validate(scenario, from_attributes=True)),
        )
        entries.append(
            ManifestEntry(
                id=scenario.id,
                template=scenario.template,
                split=split,
                seed=scenario.rng_seed,
                file=name,
            )
        )
        keep.add(name)
    for stale in directory.glob("*.json"):
        if stale.name not in keep:
            stale.unlink()
    manifest = DatasetManifest(config_hash=config_hash, entries=entries)
    write_atomic(directory / MANIFEST_NAME, _dump(manifest))
    logger.info("wrote %d scenarios to %s", len(entries), directory)
    return manifest


@catch_store_errors
def read_manifest(directory: Path) -> DatasetManifest:
    path = directory / MANIFEST_NAME
    if not path.is_file():
        raise MissingPrerequisiteError(f"no dataset manifest in {directory}")
    return DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))


@catch_store_errors
def load_scenario_file(path: Path) -> Scenario:
    return ScenarioDoc.model_validate_json(path.read_text(encoding="utf-8")).to_domain()


def load_scenarios(
    directory: Path, split: Split | None = None, ids: Sequence[str] | None = None
) -> list[Scenario]:
    """Scenarios in manifest order, optionally restricted to a split or id list."""
    manifest = read_manifest(directory)
    by_id = {e.id: e for e in manifest.entries}
    if ids is not None:
        if unknown := [i for i in ids if i not in by_id]:
            raise MissingPrerequisiteError(f"unknown scenario ids {unknown}")
        chosen = [by_id[i] for i in ids]
    else:
        chosen = [e for e in manifest.entries if split is None or e.split == split]
    return [load_scenario_file(directory / e.file) for e in chosen]


def write_vocabulary(path: Path, vocab: StaticVocabulary) -> str:
    text = _dump(VocabularyDoc.from_domain(vocab))
    write_atomic(path, text)
    return sha256_bytes(text.encode("utf-8"))


@catch_store_errors
def read_vocabulary(path: Path) -> StaticVocabulary:
    return VocabularyDoc.model_validate_json(path.read_text(encoding="utf-8")).to_domain()


def save_models(path: Path, models: PlannerModels, meta: CheckpointMeta) -> str:
    save_checkpoint(path, models.sections(), meta.model_dump(mode="json"))
    return sha256_file(path)


@catch_store_errors
def load_models(
    path: Path, models: PlannerModels, vocab_path: Path | None = None
) -> CheckpointMeta:
    """Load parameters in place; with ``vocab_path`` the vocabulary hash must match."""
    meta = CheckpointMeta.model_validate(load_checkpoint(path, models.sections()))
    if vocab_path is not None and sha256_file(vocab_path) != meta.vocab_sha256:
        raise ConfigError(
            f"checkpoint {path} was trained with a different vocabulary than {vocab_path}"
        )
    return meta


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_report(
    path: Path, reports: Sequence[EpdmsReport], summary: CorpusScore
) -> str:
    """Per-scenario rows in report column order, then the corpus mean row."""
    rows = [[r.scenario_id, r.template, *report_row(r)] for r in reports]
    rows.append([SUMMARY_ID, "", *summary_row(summary)])
    text = _csv_text(("scenario_id", "template", *HEADER), rows)
    write_atomic(path, text)
    return sha256_bytes(text.encode("utf-8"))


def write_table(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[str]],
    *,
    volatile: Collection[str] = (),
) -> str:
    """Write a CSV table; the returned digest leaves out the ``volatile`` columns."""
    table = [list(r) for r in rows]
    write_atomic(path, _csv_text(header, table))
    keep = [i for i, name in enumerate(header) if name not in volatile]
    stable = _csv_text([header[i] for i in keep], ([r[i] for i in keep] for r in table))
    return sha256_bytes(stable.encode("utf-8"))


@catch_store_errors
def read_table(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as fp:
        return list(csv.DictReader(fp))


def dump_json(path: Path, value: object) -> None:
    write_atomic(path, json.dumps(value, indent=1, sort_keys=True) + "\n")
