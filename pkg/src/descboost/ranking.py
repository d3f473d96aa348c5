"""Entropy scoring of prediction sets and description ranking.

A candidate description is scored by the mean Shannon entropy of the
model's class distributions over the corpus mentions it produces; the
lowest-entropy candidate wins. Entropies are natural-log and reported
normalized (divided by ln k) by default, so values live in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import LabelClass, PredictionSet, ProbVector, TaskKind, TaskSpec, TokenizedCorpus
from .errors import EmptyCandidates, ValidationError
from .inference.backends import Predictor, predict_entities, predict_relations
from .inference.cache import PredictionCache


def dist_entropy(p: ProbVector, normalized: bool = False) -> float:
    """Shannon entropy -sum(p_i * ln(p_i)) with 0*ln(0) = 0.

    With ``normalized`` the result is divided by ln(k), mapping it to
    [0, 1]; that requires k >= 2.
    """
    k = len(p)
    if normalized and k < 2:
        raise ValidationError("normalized entropy needs at least 2 classes")
    h = 0.0
    for v in p.values:
        if v > 0.0:
            h -= v * math.log(v)
    h = max(h, 0.0)  # clip the -0.0 of one-hot vectors
    return h / math.log(k) if normalized else h


@dataclass(frozen=True)
class EntropyReport:
    """Entropy of one candidate description over one corpus."""

    class_id: str
    description: str
    corpus_entropy: Optional[float]  # None when prediction failed
    normalized: bool
    mention_tokens: int
    sentence_count: int
    used_all_tokens_fallback: bool = False
    error: Optional[str] = None

    @property
    def mentions_per_sentence(self) -> float:
        return self.mention_tokens / self.sentence_count if self.sentence_count else 0.0

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "description": self.description,
            "corpus_entropy": self.corpus_entropy,
            "normalized": self.normalized,
            "mention_tokens": self.mention_tokens,
            "sentence_count": self.sentence_count,
            "mentions_per_sentence": self.mentions_per_sentence,
            "used_all_tokens_fallback": self.used_all_tokens_fallback,
            "error": self.error,
        }


def corpus_entropy(predictions: PredictionSet, normalized: bool = True) -> tuple[float, int, bool]:
    """Mean entropy over the corpus.

    Entity tasks average over mention tokens (argmax non-O); when no
    token is a mention the mean falls back to all tokens and the flag
    in the returned (entropy, mention_tokens, used_fallback) triple is
    set. Relation tasks average over instances.
    """
    if len(predictions) == 0:
        raise ValidationError("cannot score an empty prediction set")
    if predictions.kind is TaskKind.ENTITY:
        mention_entropies: list[float] = []
        all_entropies: list[float] = []
        for sentence in predictions.token_probs:
            for p in sentence:
                h = dist_entropy(p, normalized)
                all_entropies.append(h)
                if p.argmax() != 0:
                    mention_entropies.append(h)
        if mention_entropies:
            return sum(mention_entropies) / len(mention_entropies), len(mention_entropies), False
        return sum(all_entropies) / len(all_entropies), 0, True
    entropies = [dist_entropy(p, normalized) for p in predictions.instance_probs]
    return sum(entropies) / len(entropies), len(entropies), False


def rank_descriptions(
    cls: LabelClass,
    candidates: Sequence[str],
    corpus: TokenizedCorpus,
    spec: TaskSpec,
    predictor: Predictor,
    normalized: bool = True,
    cache: Optional[PredictionCache] = None,
) -> list[EntropyReport]:
    """Score each candidate description for ``cls`` and sort ascending.

    Each candidate is evaluated against the identical corpus with only
    this class's description substituted; every other class keeps its
    current text. Ties break toward the shorter description, then
    lexicographically. A candidate whose prediction fails is ranked
    last with the error recorded instead of being dropped.
    """
    if not candidates:
        raise EmptyCandidates(f"no candidate descriptions for class {cls.id!r}")
    reports: list[EntropyReport] = []
    failures: list[EntropyReport] = []
    for candidate in candidates:
        candidate_spec = spec.with_description(cls.id, candidate)
        pipeline_id = f"rank:{cls.id}"
        try:
            if spec.kind is TaskKind.ENTITY:
                predictions = predict_entities(predictor, corpus, candidate_spec, pipeline_id, cache)
            else:
                predictions = predict_relations(predictor, corpus, candidate_spec, pipeline_id, cache)
            entropy, mentions, fallback = corpus_entropy(predictions, normalized)
            reports.append(
                EntropyReport(cls.id, candidate, entropy, normalized, mentions, len(corpus), fallback)
            )
        except Exception as exc:  # noqa: BLE001 - a failed candidate must stay ranked
            failures.append(
                EntropyReport(cls.id, candidate, None, normalized, 0, len(corpus), error=str(exc))
            )
    reports.sort(key=lambda r: (r.corpus_entropy, len(r.description), r.description))
    failures.sort(key=lambda r: (len(r.description), r.description))
    return reports + failures


def select_min_entropy(reports: Sequence[EntropyReport]) -> str:
    """The argmin-entropy description: head of a ranked report list."""
    if not reports:
        raise EmptyCandidates("cannot select from an empty ranking")
    return reports[0].description
