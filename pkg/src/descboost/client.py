"""HTTP client for the engine service.

The CLI talks to the engine exclusively through this client. With an
endpoint it speaks real HTTP; without one it mounts the FastAPI app
in-process behind the same interface, so local runs need no server.
"""

from __future__ import annotations

from typing import Optional

import httpx

from . import errors
from .errors import ConfigError, DescboostError, ServiceError, ServiceUnavailable

_ERRORS_BY_NAME = {
    name: obj
    for name, obj in vars(errors).items()
    if isinstance(obj, type) and issubclass(obj, DescboostError)
}


class EngineClient:
    def __init__(self, endpoint: Optional[str] = None, token: Optional[str] = None, timeout: float = 300.0):
        if endpoint:
            headers = {"Authorization": f"Bearer {token}"} if token else {}
            self._client: httpx.Client = httpx.Client(
                base_url=endpoint.rstrip("/"), headers=headers, timeout=timeout
            )
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def _raise_for(self, response: httpx.Response) -> None:
        if response.status_code < 400:
            return
        try:
            body = response.json()
        except ValueError:
            body = {}
        name = body.get("error")
        detail = body.get("detail", response.text[:500])
        if name in _ERRORS_BY_NAME:
            raise _ERRORS_BY_NAME[name](detail)
        if response.status_code == 422:
            raise ConfigError(f"request rejected by the engine: {detail}")
        if response.status_code >= 500:
            raise ServiceUnavailable(f"engine error {response.status_code}: {detail}")
        raise ServiceError(f"engine error {response.status_code}: {detail}")

    def _post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.TransportError as exc:
            raise ServiceUnavailable(f"cannot reach engine at {path}: {exc}") from exc
        self._raise_for(response)
        return response.json()

    def health(self) -> dict:
        response = self._client.get("/health")
        self._raise_for(response)
        return response.json()

    def convert(self, name: str, kind: str, splits: dict, split_classes: dict, seed=None) -> dict:
        return self._post(
            "/convert",
            {"name": name, "kind": kind, "splits": splits, "split_classes": split_classes, "seed": seed},
        )

    def stats(self, corpus: dict, kind: str = "entity") -> dict:
        return self._post("/stats", {"corpus": corpus, "kind": kind})

    def generate_variations(
        self, label_class: dict, kind: str, strategy: str, n: int, generator: dict, params: Optional[dict] = None
    ) -> dict:
        return self._post(
            "/variations/generate",
            {
                "label_class": label_class,
                "kind": kind,
                "strategy": strategy,
                "n": n,
                "params": params,
                "generator": generator,
            },
        )

    def predict(
        self,
        kind: str,
        corpus: dict,
        task: dict,
        backend: dict,
        pipeline_id: str = "",
        cache_dir: Optional[str] = None,
    ) -> dict:
        path = "/predict/entities" if kind == "entity" else "/predict/relations"
        return self._post(
            path,
            {
                "corpus": corpus,
                "task": task,
                "backend": backend,
                "pipeline_id": pipeline_id,
                "cache_dir": cache_dir,
            },
        )

    def rank(
        self,
        class_id: str,
        candidates: list[str],
        corpus: dict,
        task: dict,
        backend: dict,
        normalized: bool = True,
        cache_dir: Optional[str] = None,
    ) -> list[dict]:
        body = self._post(
            "/rank",
            {
                "class_id": class_id,
                "candidates": candidates,
                "corpus": corpus,
                "task": task,
                "backend": backend,
                "normalized": normalized,
                "cache_dir": cache_dir,
            },
        )
        return body["reports"]

    def ensemble(self, kind: str, pipelines: list[dict], task: dict, config: dict) -> dict:
        path = "/ensemble/entities" if kind == "entity" else "/ensemble/relations"
        return self._post(path, {"pipelines": pipelines, "task": task, "config": config})

    def evaluate_entities(self, predictions: list[list[dict]], gold: dict, task: dict) -> dict:
        return self._post("/evaluate/entities", {"predictions": predictions, "gold": gold, "task": task})

    def evaluate_relations(self, labels: list[str], gold: dict, task: dict) -> dict:
        return self._post("/evaluate/relations", {"labels": labels, "gold": gold, "task": task})

    def analyze_correlation(self, samples: dict) -> dict:
        return self._post("/analyze/correlation", {"samples": samples})

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "EngineClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
