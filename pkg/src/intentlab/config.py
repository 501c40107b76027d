"""Flat key/value configuration files for the pipeline driver.

Grammar: one `key = value` pair per line; blank lines and lines starting
with '#' are ignored. Values are typed per key. List-valued keys take
comma-separated entries. Environment variables named INTENTLAB_<KEY>
(upper-cased) override path-like keys, the port, and the host only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from .cluster_engine import TrainParams
from .seed_select import STRATEGIES

BALANCE_MODES = ("none", "paraphrasing", "paramote", "aug")
PROVIDERS = ("echo", "synonym", "http")
ENV_PREFIX = "INTENTLAB_"


class ConfigError(ValueError):
    """All validation failures for one config file, reported together."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_name: str
    embedding_name: str
    corpus_path: Path
    embedding_path: Path
    out_dir: Path
    strategies: tuple[str, ...]
    balance_modes: tuple[str, ...]
    labeled_ratio: float
    known_class_ratio: float
    runs: int
    base_seed: int
    k: Union[int, str]
    k_prime: Optional[int] = None
    m_neighbors: int = 5
    augment_factor: int = 3
    provider: str = "echo"
    provider_url: Optional[str] = None
    alt_embedding_path: Optional[Path] = None
    jobs: int = 1
    hyper: TrainParams = field(default_factory=TrainParams)


@dataclass(frozen=True)
class ServeConfig:
    corpus_path: Path
    coords_path: Path
    state_path: Optional[Path]
    session_id: str
    session_root: Path
    host: str
    port: int


def parse_flat_file(path: Union[str, Path]) -> dict[str, str]:
    """Raw key -> value strings from a flat config file."""
    pairs: dict[str, str] = {}
    errors: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                errors.append(f"line {lineno}: expected 'key = value'")
                continue
            key, _, value = stripped.partition("=")
            pairs[key.strip()] = value.strip()
    if errors:
        raise ConfigError(errors)
    return pairs


def _apply_env(pairs: dict[str, str], env: Mapping[str, str]) -> dict[str, str]:
    out = dict(pairs)
    for key in list(out) + ["port", "host"]:
        if not (key.endswith("_path") or key.endswith("_dir") or key in ("port", "host")):
            continue
        override = env.get(ENV_PREFIX + key.upper())
        if override is not None:
            out[key] = override
    return out


class _Reader:
    def __init__(self, pairs: dict[str, str]):
        self.pairs = dict(pairs)
        self.errors: list[str] = []
        self.used: set[str] = set()

    def take(self, key: str, default=None, required: bool = False) -> Optional[str]:
        self.used.add(key)
        if key in self.pairs:
            return self.pairs[key]
        if required:
            self.errors.append(f"missing required key {key!r}")
        return default

    def take_float(self, key: str, default=None, required: bool = False):
        raw = self.take(key, None, required)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.errors.append(f"{key}: not a number: {raw!r}")
            return default

    def take_int(self, key: str, default=None, required: bool = False):
        raw = self.take(key, None, required)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.errors.append(f"{key}: not an integer: {raw!r}")
            return default

    def take_list(self, key: str, default=()) -> tuple[str, ...]:
        raw = self.take(key)
        if raw is None:
            return tuple(default)
        return tuple(part.strip() for part in raw.split(",") if part.strip())

    def unknown_keys(self) -> list[str]:
        return sorted(set(self.pairs) - self.used)


def load_experiment_config(
    path: Union[str, Path], env: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """Parse and validate an experiment config; all errors at once."""
    pairs = _apply_env(parse_flat_file(path), env if env is not None else os.environ)
    r = _Reader(pairs)
    dataset_name = r.take("dataset_name", "dataset")
    embedding_name = r.take("embedding_name", "default")
    corpus_path = r.take("corpus_path", required=True)
    embedding_path = r.take("embedding_path", required=True)
    alt_embedding_path = r.take("alt_embedding_path")
    out_dir = r.take("out_dir", required=True)
    strategies = r.take_list("strategies", ("random",))
    balance_modes = r.take_list("balance_modes", ("none",))
    labeled_ratio = r.take_float("labeled_ratio", required=True)
    known_class_ratio = r.take_float("known_class_ratio", required=True)
    runs = r.take_int("runs", 10)
    base_seed = r.take_int("base_seed", 0)
    k_raw = r.take("k", "estimate")
    k_prime = r.take_int("k_prime")
    m_neighbors = r.take_int("m_neighbors", 5)
    augment_factor = r.take_int("augment_factor", 3)
    provider = r.take("provider", "echo")
    provider_url = r.take("provider_url")
    jobs = r.take_int("jobs", 1)
    hyper = TrainParams(
        hidden_dim=r.take_int("hidden_dim", 64),
        feature_dim=r.take_int("feature_dim", 64),
        pretrain_epochs=r.take_int("pretrain_epochs", 100),
        inner_epochs=r.take_int("inner_epochs", 10),
        dac_epochs=r.take_int("dac_epochs", 30),
        batch_size=r.take_int("batch_size", 32),
        learning_rate=r.take_float("learning_rate", 0.05),
        delta_stop=r.take_float("delta_stop", 0.005),
        k_prime=k_prime,
    )

    errors = r.errors
    for key in r.unknown_keys():
        errors.append(f"unknown key {key!r}")
    k: Union[int, str]
    if k_raw == "estimate":
        k = "estimate"
        if k_prime is None:
            errors.append("k = estimate requires k_prime")
    else:
        try:
            k = int(k_raw)
            if k < 1:
                errors.append("k must be >= 1")
        except ValueError:
            k = "estimate"
            errors.append(f"k: expected an integer or 'estimate', got {k_raw!r}")
    if corpus_path and not Path(corpus_path).exists():
        errors.append(f"corpus_path does not exist: {corpus_path}")
    if embedding_path and not Path(embedding_path).exists():
        errors.append(f"embedding_path does not exist: {embedding_path}")
    if alt_embedding_path and not Path(alt_embedding_path).exists():
        errors.append(f"alt_embedding_path does not exist: {alt_embedding_path}")
    for s in strategies:
        if s not in STRATEGIES:
            errors.append(f"unknown strategy {s!r} (choose from {STRATEGIES})")
    if "cse" in strategies and not alt_embedding_path:
        errors.append("strategy cse requires alt_embedding_path")
    for mode in balance_modes:
        if mode not in BALANCE_MODES:
            errors.append(f"unknown balance mode {mode!r} (choose from {BALANCE_MODES})")
    if provider not in PROVIDERS:
        errors.append(f"unknown provider {provider!r} (choose from {PROVIDERS})")
    if provider == "http" and not provider_url:
        errors.append("provider http requires provider_url")
    if labeled_ratio is not None and not 0.0 < labeled_ratio <= 1.0:
        errors.append(f"labeled_ratio {labeled_ratio} outside (0, 1]")
    if known_class_ratio is not None and not 0.0 < known_class_ratio <= 1.0:
        errors.append(f"known_class_ratio {known_class_ratio} outside (0, 1]")
    if runs is not None and runs < 1:
        errors.append("runs must be >= 1")
    if jobs is not None and jobs < 1:
        errors.append("jobs must be >= 1")
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        dataset_name=dataset_name,
        embedding_name=embedding_name,
        corpus_path=Path(corpus_path),
        embedding_path=Path(embedding_path),
        alt_embedding_path=Path(alt_embedding_path) if alt_embedding_path else None,
        out_dir=Path(out_dir),
        strategies=strategies,
        balance_modes=balance_modes,
        labeled_ratio=labeled_ratio,
        known_class_ratio=known_class_ratio,
        runs=runs,
        base_seed=base_seed,
        k=k,
        k_prime=k_prime,
        m_neighbors=m_neighbors,
        augment_factor=augment_factor,
        provider=provider,
        provider_url=provider_url,
        jobs=jobs,
        hyper=hyper,
    )


def load_serve_config(
    path: Union[str, Path], env: Optional[Mapping[str, str]] = None
) -> ServeConfig:
    """Parse and validate a label-service config."""
    pairs = _apply_env(parse_flat_file(path), env if env is not None else os.environ)
    r = _Reader(pairs)
    corpus_path = r.take("corpus_path", required=True)
    coords_path = r.take("coords_path", required=True)
    state_path = r.take("state_path")
    session_id = r.take("session_id", "default")
    session_root = r.take("session_root_dir", "sessions")
    host = r.take("host", "127.0.0.1")
    port = r.take_int("port", 8099)
    errors = r.errors
    for key in r.unknown_keys():
        errors.append(f"unknown key {key!r}")
    if corpus_path and not Path(corpus_path).exists():
        errors.append(f"corpus_path does not exist: {corpus_path}")
    if coords_path and not Path(coords_path).exists():
        errors.append(f"coords_path does not exist: {coords_path}")
    if state_path and not Path(state_path).exists():
        errors.append(f"state_path does not exist: {state_path}")
    if errors:
        raise ConfigError(errors)
    return ServeConfig(
        corpus_path=Path(corpus_path),
        coords_path=Path(coords_path),
        state_path=Path(state_path) if state_path else None,
        session_id=session_id,
        session_root=Path(session_root),
        host=host,
        port=port,
    )
