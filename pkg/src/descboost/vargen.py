"""Description variation generation.

The engine owns prompting, decoding parameters, sanitization, dedup
and storage; the text itself comes from a generator backend (a remote
model service or a deterministic local stub). Each strategy carries
its own decoding defaults; extension with the fine-tuned generator
prompts with the class name plus the first ten words of the
description, the other strategies with the full description.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol, Sequence

from filelock import FileLock

from .core import LabelClass
from .errors import GenerationEmpty, NotFound, StorageError, ValidationError
from .inference.hashing import stable_hash64

#: Extra beam-search retries when dedup/sanitization leaves fewer than n.
MAX_RETRIES = 3
#: Temperature increase applied per retry.
RETRY_TEMPERATURE_STEP = 0.1
#: Prefix length (whitespace words) for the fine-tuned extension prompt.
FINETUNED_PREFIX_WORDS = 10


class VariationStrategy(str, Enum):
    PRETRAINED_EXTEND = "pretrained_extend"
    FINETUNED_EXTEND = "finetuned_extend"
    SUMMARIZE = "summarize"
    PARAPHRASE = "paraphrase"


@dataclass(frozen=True)
class GenerationParams:
    min_length: int
    max_length: int
    num_beams: int = 8
    temperature: float = 1.0
    no_repeat_ngram_size: int = 2
    num_return: int = 1

    def __post_init__(self):
        if self.min_length > self.max_length:
            raise ValidationError("min_length must be <= max_length")
        if self.num_beams < 1 or self.num_return < 1:
            raise ValidationError("num_beams and num_return must be >= 1")
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        if self.no_repeat_ngram_size < 0:
            raise ValidationError("no_repeat_ngram_size must be >= 0")

    def to_dict(self) -> dict:
        return {
            "min_length": self.min_length,
            "max_length": self.max_length,
            "num_beams": self.num_beams,
            "temperature": self.temperature,
            "no_repeat_ngram_size": self.no_repeat_ngram_size,
            "num_return": self.num_return,
        }


#: Decoding defaults per strategy (min_length, max_length, beams, temperature,
#: no_repeat_ngram_size).
DEFAULT_PARAMS: dict[VariationStrategy, GenerationParams] = {
    VariationStrategy.PRETRAINED_EXTEND: GenerationParams(80, 120),
    VariationStrategy.FINETUNED_EXTEND: GenerationParams(80, 120),
    VariationStrategy.SUMMARIZE: GenerationParams(80, 512),
    VariationStrategy.PARAPHRASE: GenerationParams(10, 60),
}


def default_params(strategy: VariationStrategy, num_return: int = 1) -> GenerationParams:
    return replace(DEFAULT_PARAMS[strategy], num_return=num_return)


_URL_RE = re.compile(r"(?:[a-zA-Z][a-zA-Z0-9+.-]*://\S+|www\.\S+)")
_CONTROL_RE = re.compile(r"[\x00-\x1f\x7f]")
_SPACE_RE = re.compile(r"\s+")


def sanitize(text: str) -> str:
    """Strip URLs and control characters, collapse whitespace, trim.

    Idempotent; returns '' when nothing survives.
    """
    text = _URL_RE.sub(" ", text)
    text = _CONTROL_RE.sub(" ", text)
    return _SPACE_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class Variation:
    text: str
    sanitized: bool
    source_hash: str

    def to_dict(self) -> dict:
        return {"text": self.text, "sanitized": self.sanitized, "source_hash": self.source_hash}


@dataclass(frozen=True)
class VariationSet:
    class_id: str
    strategy: VariationStrategy
    params: GenerationParams
    variations: tuple[Variation, ...]
    notes: tuple[str, ...] = ()

    def texts(self) -> list[str]:
        return [v.text for v in self.variations]

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "strategy": self.strategy.value,
            "params": self.params.to_dict(),
            "variations": [v.to_dict() for v in self.variations],
            "notes": list(self.notes),
        }

    @staticmethod
    def from_dict(data: dict) -> "VariationSet":
        return VariationSet(
            data["class_id"],
            VariationStrategy(data["strategy"]),
            GenerationParams(**data["params"]),
            tuple(Variation(**v) for v in data["variations"]),
            tuple(data.get("notes", ())),
        )


def _source_hash(original: str, strategy: VariationStrategy, params: GenerationParams, index: int) -> str:
    payload = json.dumps(
        {"original": original, "strategy": strategy.value, "params": params.to_dict(), "index": index},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class Generator(Protocol):
    def generate(self, strategy: str, context: str, params: dict) -> list[str]: ...


class EchoGenerator:
    """Returns its context verbatim; useful as an identity backend."""

    def generate(self, strategy: str, context: str, params: dict) -> list[str]:
        return [context] * params.get("num_return", 1)


class StubGenerator:
    """Offline deterministic generator for simulated runs.

    Variants are seeded word-level rewrites of the context (rotation
    plus cyclic padding up to min_length), so distinct beams yield
    distinct texts without any model behind them.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def generate(self, strategy: str, context: str, params: dict) -> list[str]:
        words = context.split() or ["description"]
        num_return = params.get("num_return", 1)
        min_length = params.get("min_length", 1)
        max_length = params.get("max_length", max(len(words), min_length))
        temp_key = repr(params.get("temperature", 1.0))
        out = []
        for beam in range(num_return):
            h = stable_hash64(self.seed, strategy, context, temp_key, beam)
            rotation = h % len(words)
            rotated = words[rotation:] + words[:rotation]
            target = min_length + (h >> 8) % (max_length - min_length + 1)
            text = [rotated[i % len(rotated)] for i in range(target)]
            out.append(" ".join(text))
        return out


def prompt_context(cls: LabelClass, strategy: VariationStrategy) -> str:
    """Generation context per strategy: the full description, except the
    fine-tuned extension which takes the name plus a ten-word prefix."""
    if strategy is VariationStrategy.FINETUNED_EXTEND:
        prefix = " ".join(cls.description.split()[:FINETUNED_PREFIX_WORDS])
        return f"{cls.name}: {prefix}"
    return cls.description


def generate_variations(
    cls: LabelClass,
    strategy: VariationStrategy,
    n: int,
    generator: Generator,
    params: Optional[GenerationParams] = None,
) -> VariationSet:
    """Obtain n distinct sanitized variations of a class description.

    Requests n beams; duplicates and empty-after-sanitization
    candidates are replaced by re-querying with the temperature bumped
    per retry, bounded by MAX_RETRIES. Raises GenerationEmpty when n
    distinct texts cannot be produced.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    base = params if params is not None else default_params(strategy)
    base = replace(base, num_return=n)
    context = prompt_context(cls, strategy)

    collected: list[Variation] = []
    seen: set[str] = set()
    attempt_params = base
    for attempt in range(MAX_RETRIES + 1):
        missing = n - len(collected)
        if missing == 0:
            break
        if attempt > 0:
            attempt_params = replace(
                attempt_params,
                temperature=attempt_params.temperature + RETRY_TEMPERATURE_STEP,
                num_return=missing,
            )
        raw = generator.generate(strategy.value, context, attempt_params.to_dict())
        for candidate in raw:
            clean = sanitize(candidate)
            if not clean or clean in seen:
                continue
            seen.add(clean)
            collected.append(
                Variation(clean, clean != candidate, _source_hash(cls.description, strategy, base, len(collected)))
            )
            if len(collected) == n:
                break
    if len(collected) < n:
        raise GenerationEmpty(
            f"{cls.id}/{strategy.value}: {len(collected)} of {n} variations after "
            f"{MAX_RETRIES} retries (sanitization or dedup removed the rest)"
        )
    notes = ()
    if strategy is VariationStrategy.FINETUNED_EXTEND:
        notes = ("prompt is the class name plus the first ten description words",)
    return VariationSet(cls.id, strategy, base, tuple(collected), notes)


class VariationArchive:
    """JSON archive of variation sets keyed by (dataset, class, strategy).

    One file per dataset; writes are serialized by a sidecar file lock
    and land atomically.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._local = threading.Lock()

    def _path(self, dataset: str) -> Path:
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", dataset)
        return self.root / f"{safe}.json"

    def _read(self, dataset: str) -> dict:
        path = self._path(dataset)
        if not path.exists():
            return {}
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise StorageError(f"cannot read archive {path}: {exc}") from exc

    def store(self, dataset: str, variation_set: VariationSet) -> None:
        path = self._path(dataset)
        with self._local, FileLock(str(path) + ".lock"):
            data = self._read(dataset)
            data.setdefault(variation_set.class_id, {})[variation_set.strategy.value] = variation_set.to_dict()
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(data, ensure_ascii=False, indent=1), encoding="utf-8")
            tmp.replace(path)

    def load(self, dataset: str, class_id: str, strategy: VariationStrategy) -> VariationSet:
        data = self._read(dataset)
        try:
            return VariationSet.from_dict(data[class_id][strategy.value])
        except KeyError:
            raise NotFound(f"no variations for ({dataset}, {class_id}, {strategy.value})") from None

    def load_all(self, dataset: str) -> list[VariationSet]:
        data = self._read(dataset)
        return [
            VariationSet.from_dict(entry)
            for by_strategy in data.values()
            for entry in by_strategy.values()
        ]
