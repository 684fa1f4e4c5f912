"""Configuration loading and validation.

A single YAML file mirrors the CLI surface; unknown keys are rejected so
typos fail fast. ``analysis_digest`` covers exactly the keys that change
analysis results, which makes run ids content-addressed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import yaml

from .exceptions import ConfigError


def _build(cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{context}: unknown key {unknown[0]!r}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        sub = _NESTED.get((cls, f.name))
        kwargs[f.name] = _build(sub, value, f"{context}.{f.name}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


@dataclass(frozen=True)
class KgConfig:
    nodes: str = ""
    edges: str = ""
    directed_relations: list[str] = field(default_factory=lambda: ["parent-of"])


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    model: str = ""
    credential_env: str = ""
    timeout: float = 30.0
    retries: int = 2
    dimension: int = 64


@dataclass(frozen=True)
class ProvidersConfig:
    mode: str = "doubles"  # "doubles" or "http"
    embedder: ProviderConfig = field(default_factory=ProviderConfig)
    adjudicator: ProviderConfig = field(default_factory=ProviderConfig)


@dataclass(frozen=True)
class ProjectionConfig:
    dimension: int = 128
    walk_length: int = 80
    walks_per_node: int = 10
    window: int = 10
    return_p: float = 1.0
    inout_q: float = 1.0
    seed: int = 42
    perplexity: float = 30.0
    max_iter: int = 1000
    early_exaggeration: float = 12.0
    reproducible: bool = True


@dataclass(frozen=True)
class HeatConfig:
    width: int = 256
    height: int = 256
    bandwidth: float = 0.02


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8351


@dataclass(frozen=True)
class Config:
    kg: KgConfig = field(default_factory=KgConfig)
    corpus: str = ""
    providers: ProvidersConfig = field(default_factory=ProvidersConfig)
    tau: float = 0.9
    top_k_candidates: int = 5
    max_paths_per_entity: int = 16
    lenient: bool = False
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    heat: HeatConfig = field(default_factory=HeatConfig)
    store_root: str = "runs"
    server: ServerConfig = field(default_factory=ServerConfig)
    concurrency: int = 1

    def validate(self) -> "Config":
        if not (0.0 < self.tau <= 1.0):
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.top_k_candidates < 1:
            raise ConfigError("top_k_candidates must be >= 1")
        if self.max_paths_per_entity < 1:
            raise ConfigError("max_paths_per_entity must be >= 1")
        if self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        if self.providers.mode not in ("doubles", "http"):
            raise ConfigError(f"providers.mode must be 'doubles' or 'http', got {self.providers.mode!r}")
        if self.heat.width < 1 or self.heat.height < 1:
            raise ConfigError("heat grid resolution must be positive")
        if self.heat.bandwidth <= 0:
            raise ConfigError("heat bandwidth must be positive")
        if self.projection.dimension < 2:
            raise ConfigError("projection.dimension must be >= 2")
        return self

    def analysis_digest(self) -> str:
        """Hash of every setting that can change analysis outputs."""
        payload = {
            "directed_relations": sorted(self.kg.directed_relations),
            "tau": self.tau,
            "top_k_candidates": self.top_k_candidates,
            "max_paths_per_entity": self.max_paths_per_entity,
            "lenient": self.lenient,
            "providers_mode": self.providers.mode,
            "embedder_model": self.providers.embedder.model,
            "embedder_dimension": self.providers.embedder.dimension,
            "adjudicator_model": self.providers.adjudicator.model,
            "projection": asdict(self.projection),
            "heat": asdict(self.heat),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


_NESTED = {
    (Config, "kg"): KgConfig,
    (Config, "providers"): ProvidersConfig,
    (Config, "projection"): ProjectionConfig,
    (Config, "heat"): HeatConfig,
    (Config, "server"): ServerConfig,
    (ProvidersConfig, "embedder"): ProviderConfig,
    (ProvidersConfig, "adjudicator"): ProviderConfig,
}


def load_config(path: str | Path) -> Config:
    """Parse and validate a YAML config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return _build(Config, data, "config").validate()


def apply_overrides(config: Config, overrides: list[str]) -> Config:
    """Apply ``key=value`` overrides with dotted paths, e.g. ``tau=0.8``."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        config = _override_one(config, keys, raw, dotted)
    return config.validate()


def _override_one(node, keys: list[str], raw: str, dotted: str):
    name = keys[0]
    if not any(f.name == name for f in fields(node)):
        raise ConfigError(f"unknown config key {dotted!r}")
    current = getattr(node, name)
    if len(keys) > 1:
        return replace(node, **{name: _override_one(current, keys[1:], raw, dotted)})
    return replace(node, **{name: _coerce(current, raw, dotted)})


def _coerce(current, raw: str, dotted: str):
    if isinstance(current, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{dotted}: expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return [s for s in raw.split(",") if s]
    return raw


def demo_config(store_root: str | Path) -> Config:
    """Config for the bundled demo fixtures, sized for a sub-second run."""
    fixture_dir = resources.files("kgaudit") / "fixtures" / "toy7"
    return Config(
        kg=KgConfig(
            nodes=str(fixture_dir / "nodes.tsv"),
            edges=str(fixture_dir / "edges_b.tsv"),
        ),
        corpus=str(fixture_dir / "corpus.jsonl"),
        projection=ProjectionConfig(
            dimension=16,
            walk_length=10,
            walks_per_node=8,
            window=3,
            perplexity=2.0,
            max_iter=500,
        ),
        heat=HeatConfig(width=64, height=64, bandwidth=0.05),
        store_root=str(store_root),
    ).validate()
