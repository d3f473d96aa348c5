"""Uniform predictor surface over the three backends.

``predict_entities`` / ``predict_relations`` add write-through caching
on top of any backend; ``predictor_calls`` counts actual backend
computations (cache hits don't count), which is how warm-rerun
behaviour is verified.
"""

from __future__ import annotations

import threading
from typing import Optional, Protocol, runtime_checkable

from ..core import PredictionSet, TaskKind, TaskSpec, TokenizedCorpus
from ..errors import ConfigError, ValidationError
from .cache import PredictionCache, cache_key
from .remote import RemoteModelClient
from .simulators import (
    LexicalSimParams,
    LexicalSimPredictor,
    NoisyOracleParams,
    NoisyOraclePredictor,
)


@runtime_checkable
class Predictor(Protocol):
    model_id: str

    def predict_entities(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = "") -> PredictionSet: ...

    def predict_relations(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = "") -> PredictionSet: ...


class _CallCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self._value = 0

    def bump(self) -> None:
        with self._lock:
            self._value += 1

    @property
    def value(self) -> int:
        return self._value

    def reset(self) -> None:
        with self._lock:
            self._value = 0


#: Number of backend predict computations performed by this process.
predictor_calls = _CallCounter()


def predict_entities(
    handle: Predictor,
    corpus: TokenizedCorpus,
    spec: TaskSpec,
    pipeline_id: str = "",
    cache: Optional[PredictionCache] = None,
) -> PredictionSet:
    if spec.kind is not TaskKind.ENTITY:
        raise ValidationError("predict_entities needs an entity task spec")

    def compute() -> PredictionSet:
        predictor_calls.bump()
        return handle.predict_entities(corpus, spec, pipeline_id)

    if cache is None:
        return compute()
    key = cache_key(handle.model_id, pipeline_id, corpus, spec)
    predictions, _ = cache.get_or_compute(key, compute)
    return predictions


def predict_relations(
    handle: Predictor,
    corpus: TokenizedCorpus,
    spec: TaskSpec,
    pipeline_id: str = "",
    cache: Optional[PredictionCache] = None,
) -> PredictionSet:
    if spec.kind is not TaskKind.RELATION:
        raise ValidationError("predict_relations needs a relation task spec")

    def compute() -> PredictionSet:
        predictor_calls.bump()
        return handle.predict_relations(corpus, spec, pipeline_id)

    if cache is None:
        return compute()
    key = cache_key(handle.model_id, pipeline_id, corpus, spec)
    predictions, _ = cache.get_or_compute(key, compute)
    return predictions


def make_predictor(config: dict) -> Predictor:
    """Build a backend from its JSON config ({"type": ..., ...})."""
    kind = config.get("type")
    if kind == "lexical_sim":
        params = LexicalSimParams(
            window=int(config.get("window", 2)),
            o_bias=float(config.get("o_bias", 1.0)),
            temperature=float(config.get("temperature", 1.0)),
        )
        return LexicalSimPredictor(params)
    if kind == "noisy_oracle":
        params = NoisyOracleParams(
            error_rate=float(config.get("error_rate", 0.1)),
            seed=int(config.get("seed", 0)),
        )
        return NoisyOraclePredictor(params)
    if kind == "remote":
        endpoint = config.get("endpoint")
        if not endpoint:
            raise ConfigError("remote backend needs an 'endpoint'")
        return RemoteModelClient(
            endpoint,
            model_id=config.get("model_id"),
            token=config.get("token"),
            batch_size=int(config.get("batch_size", 32)),
        )
    raise ConfigError(f"unknown predictor backend type {kind!r}")
