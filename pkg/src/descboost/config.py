"""Run configuration: a single JSON file with ${VAR} interpolation.

Paths are resolved relative to the config file; referenced inputs must
exist at validation time. The config hash embedded in every artifact
is computed over the interpolated document, so a rerun of the same
file under the same environment hashes identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Literal, Optional

import pydantic
from pydantic import BaseModel, Field

from .errors import ConfigError

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def _interpolate(value, path: str):
    if isinstance(value, str):
        def sub(match: re.Match) -> str:
            var, default = match.group(1), match.group(2)
            if var in os.environ:
                return os.environ[var]
            if default is not None:
                return default
            raise ConfigError(f"{path}: environment variable {var!r} is not set")

        return _ENV_RE.sub(sub, value)
    if isinstance(value, dict):
        return {k: _interpolate(v, f"{path}.{k}") for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return value


class RunConfig(BaseModel):
    task: Literal["entity", "relation"]
    dataset_name: str
    dataset_dir: str
    eval_split: str = "test"
    split_classes: dict[str, list[str]]
    descriptions: str
    class_names: Optional[dict[str, str]] = None
    strategies: dict[str, int]
    generation_params: dict[str, dict] = Field(default_factory=dict)
    include_original: bool = True
    generator: dict = Field(default_factory=lambda: {"type": "stub", "seed": 0})
    predictor: dict
    ensemble: dict = Field(default_factory=dict)
    normalized_entropy: bool = True
    cache_dir: str = ".descboost-cache"
    output_dir: str = "out"
    seed: int = 0

    # populated by load_config
    base_dir: str = "."
    config_hash: str = ""

    def path(self, p: str) -> Path:
        return (Path(self.base_dir) / p).expanduser()

    @property
    def eval_classes(self) -> list[str]:
        try:
            return list(self.split_classes[self.eval_split])
        except KeyError:
            raise ConfigError(f"split_classes has no entry for eval split {self.eval_split!r}") from None

    def corpus_path(self, split: str) -> Path:
        return self.path(self.dataset_dir) / f"{split}.jsonl"


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    resolved = _interpolate(raw, "config")
    try:
        config = RunConfig(**resolved)
    except pydantic.ValidationError as exc:
        fields = "; ".join(
            ".".join(str(part) for part in err["loc"]) + ": " + err["msg"] for err in exc.errors()
        )
        raise ConfigError(f"{path}: {fields}") from exc
    config.base_dir = str(path.parent)
    config.config_hash = hashlib.sha256(
        json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()[:16]

    for split in config.split_classes:
        corpus = config.corpus_path(split)
        if not corpus.exists():
            raise ConfigError(f"split_classes.{split}: corpus file {corpus} does not exist")
    if not config.path(config.descriptions).exists():
        raise ConfigError(f"descriptions: file {config.path(config.descriptions)} does not exist")
    if config.eval_split not in config.split_classes:
        raise ConfigError(f"eval_split: no class set for {config.eval_split!r}")
    for strategy, n in config.strategies.items():
        if n < 1:
            raise ConfigError(f"strategies.{strategy}: n must be >= 1")
    return config
