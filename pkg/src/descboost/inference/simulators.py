"""Deterministic predictor test doubles.

``LexicalSimPredictor`` scores tokens by lexical overlap with class
descriptions; ``NoisyOraclePredictor`` perturbs gold labels with a
seeded, hash-driven error process. Both are bit-deterministic across
runs: all randomness comes from :func:`stable_hash64` and the softmax
sums IEEE doubles in class-index order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..core import ProbVector, TaskKind, TaskSpec, TokenizedCorpus
from ..errors import MissingEntityPair, ValidationError
from .hashing import stable_hash64, unit_interval

_WORD_RE = re.compile(r"[a-z0-9]+")


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _token_form(token: str) -> str:
    """Lowercase alphanumeric core of a token; '' for pure punctuation."""
    return "".join(_WORD_RE.findall(token.lower()))


def _softmax(scores: list[float], temperature: float) -> ProbVector:
    scaled = [s / temperature for s in scores]
    peak = max(scaled)
    exps = [math.exp(s - peak) for s in scaled]
    total = sum(exps)
    return ProbVector(tuple(e / total for e in exps))


@dataclass(frozen=True)
class LexicalSimParams:
    window: int = 2
    o_bias: float = 1.0
    temperature: float = 1.0

    def __post_init__(self):
        if self.window < 0:
            raise ValidationError("window radius must be >= 0")
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")


class LexicalSimPredictor:
    """Scores class c at token t by counting window tokens whose lowercase
    form appears in c's description word set; the O class scores a flat
    bias. Probabilities are softmax(scores / temperature)."""

    def __init__(self, params: LexicalSimParams | None = None):
        self.params = params or LexicalSimParams()
        p = self.params
        self.model_id = f"lexical-sim(window={p.window},o_bias={p.o_bias!r},temperature={p.temperature!r})"

    def predict_entities(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = ""):
        from ..core import PredictionSet

        desc_words = [frozenset(_words(c.description)) for c in spec.classes]
        r = self.params.window
        sentences = []
        for sentence in corpus.sentences:
            forms = [_token_form(t) for t in sentence.tokens]
            vectors = []
            for i in range(len(forms)):
                window = forms[max(0, i - r) : i + r + 1]
                scores = [self.params.o_bias]
                for c in range(1, spec.k):
                    scores.append(float(sum(1 for w in window if w and w in desc_words[c])))
                vectors.append(_softmax(scores, self.params.temperature))
            sentences.append(tuple(vectors))
        return PredictionSet(pipeline_id, TaskKind.ENTITY, spec.class_ids, token_probs=tuple(sentences))

    def predict_relations(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = ""):
        from ..core import PredictionSet

        desc_words = [frozenset(_words(c.description)) for c in spec.classes]
        vectors = []
        for sentence in corpus.sentences:
            if sentence.relation_instance is None:
                raise MissingEntityPair("relation prediction needs head/tail spans on every sentence")
            forms = [_token_form(t) for t in sentence.tokens]
            scores = []
            for c in range(spec.k):
                if spec.includes_negative and c == 0:
                    scores.append(self.params.o_bias)
                else:
                    scores.append(float(sum(1 for w in forms if w and w in desc_words[c])))
            vectors.append(_softmax(scores, self.params.temperature))
        return PredictionSet(pipeline_id, TaskKind.RELATION, spec.class_ids, instance_probs=tuple(vectors))


@dataclass(frozen=True)
class NoisyOracleParams:
    error_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.error_rate < 1.0):
            raise ValidationError("error_rate must be in [0, 1)")


class NoisyOraclePredictor:
    """Emits gold labels flipped to a different class with probability
    error_rate, as 0.9-vs-uniform-rest distributions.

    The flip decision and replacement class are pure functions of
    (seed, pipeline_id, sentence_index, token_index), so predictions
    are reproducible per pipeline.
    """

    def __init__(self, params: NoisyOracleParams | None = None):
        self.params = params or NoisyOracleParams()
        p = self.params
        self.model_id = f"noisy-oracle(error_rate={p.error_rate!r},seed={p.seed})"

    def _emitted_index(self, gold: int, k: int, pipeline_id: str, sent_i: int, tok_i: int) -> int:
        if k < 2:
            return gold
        u = unit_interval(stable_hash64(self.params.seed, pipeline_id, sent_i, tok_i))
        if u >= self.params.error_rate:
            return gold
        pick = stable_hash64(self.params.seed, pipeline_id, sent_i, tok_i, "alt") % (k - 1)
        alternatives = [c for c in range(k) if c != gold]
        return alternatives[pick]

    @staticmethod
    def _vector(winner: int, k: int) -> ProbVector:
        if k == 1:
            return ProbVector((1.0,))
        rest = 0.1 / (k - 1)
        return ProbVector(tuple(0.9 if c == winner else rest for c in range(k)))

    def predict_entities(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = ""):
        from ..core import PredictionSet

        sentences = []
        for i, sentence in enumerate(corpus.sentences):
            gold = [spec.index_of(label) for label in sentence.token_labels()]
            vectors = tuple(
                self._vector(self._emitted_index(g, spec.k, pipeline_id, i, j), spec.k)
                for j, g in enumerate(gold)
            )
            sentences.append(vectors)
        return PredictionSet(pipeline_id, TaskKind.ENTITY, spec.class_ids, token_probs=tuple(sentences))

    def predict_relations(self, corpus: TokenizedCorpus, spec: TaskSpec, pipeline_id: str = ""):
        from ..core import PredictionSet

        vectors = []
        for i, sentence in enumerate(corpus.sentences):
            instance = sentence.relation_instance
            if instance is None:
                raise MissingEntityPair("relation prediction needs head/tail spans on every sentence")
            if instance.relation_id is None:
                raise ValidationError("the noisy oracle needs gold relation labels")
            gold = spec.index_of(instance.relation_id)
            vectors.append(self._vector(self._emitted_index(gold, spec.k, pipeline_id, i, 0), spec.k))
        return PredictionSet(pipeline_id, TaskKind.RELATION, spec.class_ids, instance_probs=tuple(vectors))
