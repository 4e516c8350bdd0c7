"""
Configuration utilities for qubo_gnn.

This module provides dataclass representations of the solver and
benchmark configuration and helper functions to load YAML files into
that structure. ``config/default.yaml`` is overlaid with an optional
user file; command-line flags are applied afterwards by
:mod:`qubo_gnn.main`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from ..errors import ConfigError, MissingHyperparamsError
from ..training import TrainConfig

PROJECT_ROOT = Path(__file__).resolve().parents[3]
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "default.yaml"
DEFAULT_HYPERPARAMS_PATH = PROJECT_ROOT / "config" / "gset_hyperparams.yaml"


@dataclass(frozen=True)
class SolverConfig:
    """Problem encoding and post-processing options."""

    penalty: float = 2.0
    polish: bool = False
    threshold: float = 0.5
    truncate: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.penalty > 0:
            raise ConfigError(f"penalty must be positive, got {self.penalty}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")


@dataclass(frozen=True)
class BenchSettings:
    """Where benchmark artefacts go and how aggregates are computed."""

    bootstrap_resamples: int = 1000
    output_file: Path = Path("./results/report.json")
    rows_file: Path = Path("./results/rows.jsonl")
    checkpoint_file: Path = Path("./results/checkpoints.txt")
    csv_file: Optional[Path] = None
    hyperparams_file: Path = DEFAULT_HYPERPARAMS_PATH

    def __post_init__(self) -> None:
        if self.bootstrap_resamples < 1:
            raise ConfigError("bootstrap_resamples must be at least 1")


@dataclass(frozen=True)
class MetricsConfig:
    """Metrics configuration for exposing Prometheus counters and histograms."""

    enabled: bool = False
    port: int = 8000
    prefix: str = "qubo_gnn"


@dataclass(frozen=True)
class LoggingConfig:
    """Logging configuration for structured JSON logs and file output."""

    level: str = "INFO"
    json: bool = True
    file: Optional[str] = None


@dataclass(frozen=True)
class AppConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    bench: BenchSettings = field(default_factory=BenchSettings)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def with_overrides(self, section: str, **overrides: Any) -> "AppConfig":
        """Copy with ``section`` fields replaced; ``None`` values keep the current setting."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if not changes:
            return self
        current = getattr(self, section)
        updated = _build(type(current), {**_as_mapping(current), **changes})
        return replace(self, **{section: updated})


@dataclass(frozen=True)
class GsetHyperparams:
    """Per-graph architecture and optimiser settings for the Gset benchmark."""

    name: str
    embedding_dim: int
    hidden_dims: Tuple[int, ...]
    learning_rate: float
    dropout: float = 0.0
    best_known: Optional[float] = None

    def apply(self, cfg: TrainConfig) -> TrainConfig:
        return replace(
            cfg,
            embedding_dim=self.embedding_dim,
            hidden_dims=self.hidden_dims,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
        )


def _as_mapping(obj: Any) -> Dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _build(cls: type, values: Dict[str, Any]) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def _deep_update(dst: dict, src: dict) -> dict:
    """Recursively merge ``src`` into ``dst`` and return the result.

    Used to overlay user-provided configuration on top of the defaults
    without mutating either input.
    """

    result = dict(dst)
    for key, value in src.items():
        if isinstance(value, dict) and key in result and isinstance(result[key], dict):
            result[key] = _deep_update(result[key], value)
        else:
            result[key] = value
    return result


def _load_yaml(path: Path) -> dict:
    """Load a YAML mapping; raises ``FileNotFoundError`` if the file does not exist."""

    with path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _paths(conf: Dict[str, Any], keys: Tuple[str, ...]) -> Dict[str, Any]:
    return {k: (Path(v) if v is not None and k in keys else v) for k, v in conf.items()}


def load_config(config_path: Optional[Path] = None) -> AppConfig:
    """Load the application configuration.

    ``config/default.yaml`` is used when present, otherwise dataclass
    defaults. A user file given by ``config_path`` is merged on top.

    Raises
    ------
    ConfigError
        On unknown keys or invalid values.
    """

    defaults = _load_yaml(DEFAULT_CONFIG_PATH) if DEFAULT_CONFIG_PATH.exists() else {}
    user_config: dict = {}
    if config_path:
        try:
            user_config = _load_yaml(Path(config_path))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    merged = _deep_update(defaults, user_config)

    unknown = set(merged) - {"train", "solver", "bench", "metrics", "logging"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    bench_conf = _paths(
        merged.get("bench") or {},
        ("output_file", "rows_file", "checkpoint_file", "csv_file", "hyperparams_file"),
    )
    if "hyperparams_file" in bench_conf and not bench_conf["hyperparams_file"].is_absolute():
        bench_conf["hyperparams_file"] = PROJECT_ROOT / bench_conf["hyperparams_file"]

    return AppConfig(
        train=_build(TrainConfig, merged.get("train") or {}),
        solver=_build(SolverConfig, merged.get("solver") or {}),
        bench=_build(BenchSettings, bench_conf),
        metrics=_build(MetricsConfig, merged.get("metrics") or {}),
        logging=_build(LoggingConfig, merged.get("logging") or {}),
    )


def load_gset_hyperparams(path: Optional[Path] = None) -> Dict[str, GsetHyperparams]:
    """Parse the per-graph hyperparameter table.

    The file maps graph names to ``embedding_dim``, ``hidden_dims``,
    ``learning_rate``, ``dropout`` and optionally ``best_known``. A
    ``default`` entry, if present, is returned under that name.
    """

    source = Path(path) if path is not None else DEFAULT_HYPERPARAMS_PATH
    try:
        raw = _load_yaml(source).get("graphs") or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read hyperparameter table {source}: {exc}") from exc
    table = {}
    for name, row in raw.items():
        try:
            table[str(name)] = GsetHyperparams(
                name=str(name),
                embedding_dim=int(row["embedding_dim"]),
                hidden_dims=tuple(int(h) for h in row["hidden_dims"]),
                learning_rate=float(row["learning_rate"]),
                dropout=float(row.get("dropout", 0.0)),
                best_known=None if row.get("best_known") is None else float(row["best_known"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: bad hyperparameter row {name!r}: {exc}") from exc
    return table


def lookup_hyperparams(table: Dict[str, GsetHyperparams], name: str) -> GsetHyperparams:
    """Row for ``name``, falling back to a ``default`` row; raises if neither exists."""
    if name in table:
        return table[name]
    if "default" in table:
        return replace(table["default"], name=name, best_known=None)
    raise MissingHyperparamsError(f"no hyperparameters for graph {name!r} and no default row")
