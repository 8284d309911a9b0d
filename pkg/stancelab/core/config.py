"""
Stancelab - Configuration Manager
YAML pipeline configuration with environment and command-line overrides
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .cluster import ClusterParams
from .corpus import TopicSpec, fold_case
from .embed import HashEmbedderParams
from .errors import ConfigError
from .labelprop import PropagationParams
from .polarize import RwcParams
from .project import ProjectionParams

logger = logging.getLogger(__name__)

PATH_FIELDS = ("corpus", "seeds", "gold", "profiles", "seed_rules", "embeddings", "out")
ENV_PREFIX = "STANCELAB_"
TRUE_VALUES = {"1", "true", "yes", "on"}


class TopicConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    keywords: List[str] = Field(min_length=1)
    ascii_variants: bool = False

    def to_spec(self) -> TopicSpec:
        spec = TopicSpec(name=self.name, keywords=frozenset(fold_case(k).strip() for k in self.keywords))
        return spec.with_ascii_variants() if self.ascii_variants else spec


class LexiconParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    top: int = Field(default=50, ge=1)
    stopwords: Optional[Path] = None


class PipelineConfig(BaseModel):
    """Everything one pipeline run needs"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    corpus: Path
    seeds: Optional[Path] = None
    gold: Optional[Path] = None
    profiles: Optional[Path] = None
    seed_rules: Optional[Path] = None
    embeddings: Optional[Path] = None
    hash_embedder: HashEmbedderParams = HashEmbedderParams()
    representation: Literal["text", "retweets"] = "text"
    topics: List[TopicConfig] = Field(min_length=1)
    languages: Optional[List[str]] = None
    projection: ProjectionParams = ProjectionParams()
    clustering: ClusterParams = ClusterParams()
    propagation: PropagationParams = PropagationParams()
    rwc: RwcParams = RwcParams()
    lexicon: LexiconParams = LexiconParams()
    out: Path = Path("stancelab-out")
    seed: int = Field(default=7, ge=0, lt=2**64)
    deterministic: bool = False
    plots: bool = True
    threads: int = Field(default=4, ge=1)

    @property
    def topic_specs(self) -> List[TopicSpec]:
        return [t.to_spec() for t in self.topics]

    def check_paths(self) -> None:
        """Raise ConfigError when an input file is missing."""
        for name in PATH_FIELDS:
            value = getattr(self, name)
            if name == "out" or value is None:
                continue
            if not value.exists():
                raise ConfigError(f"{name}: file not found: {value}")


class ConfigManager:
    """Layered configuration: YAML file, then STANCELAB_* environment, then overrides"""

    def __init__(self, config_file: Optional[Union[str, Path]] = None):
        self.config_file = Path(config_file) if config_file is not None else None
        self._config: Dict[str, Any] = {}

    def load(self) -> Dict[str, Any]:
        """Read the YAML layer; input paths are resolved against the file's folder."""
        if self.config_file is None:
            return self._config
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {self.config_file}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {self.config_file}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_file}: top level must be a mapping")
        base = self.config_file.parent
        for name in PATH_FIELDS:
            if data.get(name) is not None:
                data[name] = str(base / Path(data[name]).expanduser())
        lexicon = data.get("lexicon")
        if isinstance(lexicon, dict) and lexicon.get("stopwords"):
            lexicon["stopwords"] = str(base / Path(lexicon["stopwords"]).expanduser())
        self._config = data
        return self._config

    def apply_env(self) -> None:
        """Overlay STANCELAB_SEED, STANCELAB_OUT and STANCELAB_DETERMINISTIC."""
        load_dotenv()
        seed = os.getenv(f"{ENV_PREFIX}SEED")
        if seed:
            try:
                self._config["seed"] = int(seed)
            except ValueError as e:
                raise ConfigError(f"{ENV_PREFIX}SEED must be an integer, got {seed!r}") from e
        out = os.getenv(f"{ENV_PREFIX}OUT")
        if out:
            self._config["out"] = out
        deterministic = os.getenv(f"{ENV_PREFIX}DETERMINISTIC")
        if deterministic:
            self._config["deterministic"] = deterministic.strip().lower() in TRUE_VALUES

    def get(self, key: str, default: Any = None) -> Any:
        """Current layered value for ``key`` (YAML, environment or override)."""
        return self._config.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Override a configuration value; None leaves it untouched"""
        if value is not None:
            self._config[key] = value

    def build(self, check_paths: bool = True) -> PipelineConfig:
        """Validate the layered values into a PipelineConfig.
        Raises:
            ConfigError: On unknown keys, invalid values, zero topics or missing input files.
        """
        if not self._config.get("topics"):
            raise ConfigError("configuration needs at least one topic")
        try:
            config = PipelineConfig.model_validate(self._config)
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        try:
            config.topic_specs
        except ValueError as e:
            raise ConfigError(f"invalid topic: {e}") from e
        if check_paths:
            config.check_paths()
        logger.debug(f"configuration: {len(config.topics)} topics, seed={config.seed}, out={config.out}")
        return config


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None, check_paths: bool = True
) -> PipelineConfig:
    """Load, overlay environment and overrides, validate."""
    manager = ConfigManager(path)
    manager.load()
    manager.apply_env()
    for key, value in (overrides or {}).items():
        manager.set(key, value)
    return manager.build(check_paths=check_paths)

