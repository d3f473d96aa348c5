"""Content-addressed on-disk cache for prediction sets.

Keys cover the backend identity, the pipeline id, the corpus content
and the task spec including every description text, so changing any
description (or the noisy-oracle pipeline id) always misses. Entries
are checksummed; a corrupt entry is treated as a miss with a warning,
never as data.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable, Optional

from ..core import PredictionSet, TaskSpec, TokenizedCorpus

log = logging.getLogger(__name__)


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cache_key(model_id: str, pipeline_id: str, corpus: TokenizedCorpus, spec: TaskSpec) -> str:
    payload = {
        "model_id": model_id,
        "pipeline_id": pipeline_id,
        "corpus": corpus.to_dict(),
        "spec": spec.to_dict(),
    }
    return _sha256(canonical_json(payload))


class PredictionCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def _key_lock(self, key: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(key, threading.Lock())

    def get(self, key: str) -> Optional[PredictionSet]:
        path = self._path(key)
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            entry = json.loads(raw)
            payload = entry["payload"]
            if _sha256(canonical_json(payload)) != entry["checksum"]:
                log.warning("cache entry %s failed checksum; recomputing", key[:12])
                return None
            return PredictionSet.from_dict(payload)
        except (KeyError, ValueError, TypeError):
            log.warning("cache entry %s unreadable; recomputing", key[:12])
            return None

    def put(self, key: str, predictions: PredictionSet) -> None:
        payload = predictions.to_dict()
        entry = {"checksum": _sha256(canonical_json(payload)), "payload": payload}
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry), encoding="utf-8")
        os.replace(tmp, path)

    def get_or_compute(self, key: str, compute: Callable[[], PredictionSet]) -> tuple[PredictionSet, bool]:
        """Returns (predictions, was_hit); concurrent misses on one key
        compute at most once per process."""
        with self._key_lock(key):
            cached = self.get(key)
            if cached is not None:
                return cached, True
            fresh = compute()
            self.put(key, fresh)
            return fresh, False
