"""HTTP client for the model-server wire protocol.

Endpoints: POST /generate, POST /predict_entities, POST
/predict_relations, GET /health. Requests are retried on transport
errors (the server side is stateless, so at-least-once is safe); cache
effects stay exactly-once because callers write through
:class:`PredictionCache`.
"""

from __future__ import annotations

import time
from typing import Optional, Sequence

import httpx

from ..core import PredictionSet, ProbVector, TaskKind, TaskSpec, TokenizedCorpus
from ..errors import (
    GeneratorUnavailable,
    MissingEntityPair,
    ProtocolError,
    ServiceUnavailable,
    ShapeError,
)

DEFAULT_BATCH_SIZE = 32


class RemoteModelClient:
    """Predictor and generator backed by a remote inference service."""

    def __init__(
        self,
        endpoint: str,
        model_id: Optional[str] = None,
        token: Optional[str] = None,
        batch_size: int = DEFAULT_BATCH_SIZE,
        timeout: float = 60.0,
        retries: int = 2,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.retries = retries
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(
            base_url=self.endpoint, headers=headers, timeout=timeout, transport=transport
        )
        self._model_id = model_id

    @property
    def model_id(self) -> str:
        if self._model_id is None:
            self._model_id = str(self.health().get("model_id", self.endpoint))
        return self._model_id

    def _request(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._client.request(method, path, json=payload)
            except httpx.TransportError as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.2 * (attempt + 1))
                continue
            if response.status_code >= 500:
                raise ServiceUnavailable(f"{path} -> {response.status_code}: {response.text[:200]}")
            if response.status_code >= 400:
                raise ProtocolError(f"{path} -> {response.status_code}: {response.text[:200]}")
            try:
                return response.json()
            except ValueError as exc:
                raise ProtocolError(f"{path}: response is not JSON") from exc
        raise ServiceUnavailable(f"{path}: {last_error}")

    def health(self) -> dict:
        return self._request("GET", "/health")

    # -- generation ------------------------------------------------------

    def generate(self, strategy: str, context: str, params: dict) -> list[str]:
        try:
            body = self._request(
                "POST", "/generate", {"strategy": strategy, "context": context, "params": params}
            )
        except ServiceUnavailable as exc:
            raise GeneratorUnavailable(str(exc)) from exc
        variations = body.get("variations")
        if not isinstance(variations, list) or not all(isinstance(v, str) for v in variations):
            raise ProtocolError("/generate: expected {'variations': [str, ...]}")
        return variations

    # -- prediction ------------------------------------------------------

    def predict_entities(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = "") -> PredictionSet:
        # The wire format sends non-O classes; the server prepends O at index 0.
        classes = [c.to_dict() for c in spec.positive_classes()]
        sentences_out: list[tuple[ProbVector, ...]] = []
        batch = self.batch_size
        for lo in range(0, len(corpus.sentences), batch):
            chunk = corpus.sentences[lo : lo + batch]
            body = self._request(
                "POST",
                "/predict_entities",
                {"sentences": [list(s.tokens) for s in chunk], "classes": classes},
            )
            probs = body.get("probs")
            if not isinstance(probs, list) or len(probs) != len(chunk):
                raise ProtocolError("/predict_entities: bad probs shape")
            for sentence, rows in zip(chunk, probs):
                if len(rows) != len(sentence.tokens):
                    raise ShapeError(
                        f"expected {len(sentence.tokens)} token rows, got {len(rows)}"
                    )
                vectors = []
                for row in rows:
                    if len(row) != spec.k:
                        raise ShapeError(f"expected {spec.k} probabilities, got {len(row)}")
                    vectors.append(ProbVector(tuple(float(v) for v in row)))
                sentences_out.append(tuple(vectors))
        return PredictionSet(pipeline_id, TaskKind.ENTITY, spec.class_ids, token_probs=tuple(sentences_out))

    def predict_relations(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = "") -> PredictionSet:
        relations = [c.to_dict() for c in spec.classes]
        instances = []
        for sentence in corpus.sentences:
            ri = sentence.relation_instance
            if ri is None:
                raise MissingEntityPair("relation prediction needs head/tail spans on every sentence")
            instances.append({"tokens": list(sentence.tokens), "head": list(ri.head), "tail": list(ri.tail)})
        vectors: list[ProbVector] = []
        batch = self.batch_size
        for lo in range(0, len(instances), batch):
            chunk = instances[lo : lo + batch]
            body = self._request(
                "POST", "/predict_relations", {"instances": chunk, "relations": relations}
            )
            probs = body.get("probs")
            if not isinstance(probs, list) or len(probs) != len(chunk):
                raise ProtocolError("/predict_relations: bad probs shape")
            for row in probs:
                if len(row) != spec.k:
                    raise ShapeError(f"expected {spec.k} probabilities, got {len(row)}")
                vectors.append(ProbVector(tuple(float(v) for v in row)))
        return PredictionSet(pipeline_id, TaskKind.RELATION, spec.class_ids, instance_probs=tuple(vectors))

    def close(self) -> None:
        self._client.close()
