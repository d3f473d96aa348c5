import random

import pytest

from descboost.core import (
    LabelClass,
    LabeledSpan,
    PredictionSet,
    ProbVector,
    TaskKind,
    TaskSpec,
    TokenizedCorpus,
    TokenizedSentence,
)


def onehotish(k: int, winner: int, peak: float = 0.9) -> ProbVector:
    rest = (1.0 - peak) / (k - 1)
    return ProbVector(tuple(peak if i == winner else rest for i in range(k)))


def entity_spec(*class_ids: str) -> TaskSpec:
    classes = [LabelClass(c, c, f"description of {c}") for c in class_ids]
    return TaskSpec.entity_task(classes)


def relation_spec(*class_ids: str) -> TaskSpec:
    classes = [LabelClass(c, c, f"description of {c}", TaskKind.RELATION) for c in class_ids]
    return TaskSpec.relation_task(classes)


def entity_predictions(pipeline_id: str, spec: TaskSpec, sentences: list[list[int]], peak: float = 0.9) -> PredictionSet:
    """Build an entity PredictionSet from per-token winning class indices."""
    payload = tuple(
        tuple(onehotish(spec.k, winner, peak) for winner in sentence) for sentence in sentences
    )
    return PredictionSet(pipeline_id, TaskKind.ENTITY, spec.class_ids, token_probs=payload)


def random_prob_vector(rng: random.Random, k: int) -> ProbVector:
    weights = [rng.random() + 1e-9 for _ in range(k)]
    total = sum(weights)
    return ProbVector(tuple(w / total for w in weights))


def sentence(tokens: list[str], spans: list[tuple[int, int, str]] = ()) -> TokenizedSentence:
    return TokenizedSentence(tuple(tokens), tuple(LabeledSpan(s, e, c) for s, e, c in spans))


def corpus(*sentences: TokenizedSentence) -> TokenizedCorpus:
    return TokenizedCorpus(tuple(sentences))


@pytest.fixture
def fruit_spec() -> TaskSpec:
    return TaskSpec.entity_task([LabelClass("FRUIT", "fruit", "apple banana fruit")])
