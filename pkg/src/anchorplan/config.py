import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from anchorplan.decoder.model import DecoderConfig
from anchorplan.diffusion.denoiser import DenoiserConfig
from anchorplan.diffusion.sampler import PlannerConfig
from anchorplan.diffusion.training import TrainConfig
from anchorplan.errors import ConfigError
from anchorplan.metrics.models import EpdmsConfig
from anchorplan.utils.digest import sha256_json
from anchorplan.world.models import WorldConfig

DEFAULT_OUT_DIR = Path("runs/default")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="ANCHORPLAN_",
        env_nested_delimiter="__",
        extra="ignore",
    )

    out_dir: Path = DEFAULT_OUT_DIR
    jobs: int = 1
    seed: int = 0
    log_level: str = "INFO"


settings = Settings()


class DataConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_per_template: int = Field(340, ge=0)
    eval_per_template: int = Field(50, ge=0)


class RunPaths(BaseModel):
    """Artifact locations; everything defaults to a fixed layout under ``out_dir``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    out_dir: Path = DEFAULT_OUT_DIR
    dataset_dir: Path | None = None
    vocab_path: Path | None = None
    checkpoint_path: Path | None = None

    @property
    def dataset(self) -> Path:
        return self.dataset_dir or self.out_dir / "dataset"

    @property
    def vocab(self) -> Path:
        return self.vocab_path or self.out_dir / "vocab.json"

    @property
    def checkpoint(self) -> Path:
        return self.checkpoint_path or self.out_dir / "model.ckpt"

    @property
    def reports(self) -> Path:
        return self.out_dir / "reports"

    @property
    def renders(self) -> Path:
        return self.out_dir / "renders"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = 0
    jobs: int = Field(1, ge=1)
    paths: RunPaths = RunPaths()
    data: DataConfig = DataConfig()
    world: WorldConfig = WorldConfig()
    decoder: DecoderConfig = DecoderConfig()
    denoiser: DenoiserConfig = DenoiserConfig()
    planner: PlannerConfig = PlannerConfig()
    train: TrainConfig = TrainConfig()
    epdms: EpdmsConfig = EpdmsConfig()

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.decoder.num_queries != self.planner.k_dynamic:
            raise ValueError("decoder query count must equal planner k_dynamic")
        if self.decoder.horizon != self.world.horizon:
            raise ValueError("decoder horizon must equal world horizon")
        if self.decoder.map_width != 2 * self.world.map_points:
            raise ValueError("decoder map_width must be 2 * world.map_points")
        if self.decoder.grid != self.world.grid:
            raise ValueError("decoder grid must equal world grid")
        if self.denoiser.context_width != self.decoder.embed:
            raise ValueError("denoiser context_width must equal decoder embed")
        if self.denoiser.horizon != self.world.horizon:
            raise ValueError("denoiser horizon must equal world horizon")
        if self.epdms.ego != self.world.ego:
            raise ValueError("epdms.ego must equal world.ego")
        return self

    def canonical_json(self) -> str:
        return json.dumps(
            self.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
        )

    def config_hash(self) -> str:
        return sha256_json(self.model_dump(mode="json", exclude={"jobs", "paths"}))


def load_run_config(
    path: Path | None = None,
    *,
    seed: int | None = None,
    out_dir: Path | None = None,
    jobs: int | None = None,
) -> RunConfig:
    """Read a JSON run config (or the defaults) and apply command-line overrides."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file {path} not found") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    raw.setdefault("seed", settings.seed)
    raw.setdefault("jobs", settings.jobs)
    raw.setdefault("paths", {}).setdefault("out_dir", str(settings.out_dir))
    if seed is not None:
        raw["seed"] = seed
    if jobs is not None:
        raw["jobs"] = jobs
    if out_dir is not None:
        raw["paths"]["out_dir"] = str(out_dir)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
