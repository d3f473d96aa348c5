"""Pydantic request/response models for the engine service.

Wire conventions mirror the model-server protocol: entity tasks send
the positive classes only and the O class is implicit at index 0;
relation tasks send the full class list in order.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..core import (
    LabelClass,
    SpanAnnotation,
    Split,
    TaskKind,
    TaskSpec,
    TokenizedCorpus,
    TokenizedSentence,
)
from ..ensemble import EnsembleConfig, TieBreak


class SentenceRow(BaseModel):
    tokens: list[str]
    spans: Optional[list[dict]] = None
    head: Optional[list[int]] = None
    tail: Optional[list[int]] = None
    relation: Optional[str] = None

    def to_sentence(self) -> TokenizedSentence:
        return TokenizedSentence.from_dict(self.model_dump(exclude_none=True))

    @staticmethod
    def from_sentence(sentence: TokenizedSentence) -> "SentenceRow":
        return SentenceRow(**sentence.to_dict())


class CorpusPayload(BaseModel):
    name: str = ""
    split: str = "test"
    sentences: list[SentenceRow]

    def to_corpus(self) -> TokenizedCorpus:
        return TokenizedCorpus(
            tuple(row.to_sentence() for row in self.sentences), Split(self.split), self.name
        )

    @staticmethod
    def from_corpus(corpus: TokenizedCorpus) -> "CorpusPayload":
        return CorpusPayload(
            name=corpus.name,
            split=corpus.split.value,
            sentences=[SentenceRow.from_sentence(s) for s in corpus.sentences],
        )


class ClassPayload(BaseModel):
    id: str
    name: str
    description: str


class TaskPayload(BaseModel):
    kind: Literal["entity", "relation"]
    classes: list[ClassPayload]
    includes_negative: bool = False

    def to_spec(self) -> TaskSpec:
        kind = TaskKind(self.kind)
        classes = [LabelClass(c.id, c.name, c.description, kind) for c in self.classes]
        if kind is TaskKind.ENTITY:
            return TaskSpec.entity_task(classes)
        return TaskSpec.relation_task(classes, self.includes_negative)


class BackendPayload(BaseModel):
    """Predictor backend spec; extra keys are backend parameters."""

    model_config = {"extra": "allow"}

    type: Literal["lexical_sim", "noisy_oracle", "remote"]


class GeneratorPayload(BaseModel):
    model_config = {"extra": "allow"}

    type: Literal["stub", "echo", "remote"]


class EnsemblePayload(BaseModel):
    min_votes: int = 1
    tie_break: Literal["lowest_class_index", "highest_mean_score"] = "highest_mean_score"

    def to_config(self) -> EnsembleConfig:
        return EnsembleConfig(self.min_votes, TieBreak(self.tie_break))


class PredictionPayload(BaseModel):
    pipeline_id: str
    kind: Literal["entity", "relation"]
    class_ids: list[str]
    probs: list  # nested per kind: [[[float]]] for entity, [[float]] for relation


class AnnotationRow(BaseModel):
    sentence_index: int
    start: int
    end: int
    class_id: str
    score: float = Field(ge=0.0, le=1.0)

    def to_annotation(self) -> SpanAnnotation:
        return SpanAnnotation(self.sentence_index, self.start, self.end, self.class_id, self.score)

    @staticmethod
    def from_annotation(a: SpanAnnotation) -> "AnnotationRow":
        return AnnotationRow(
            sentence_index=a.sentence_index, start=a.start, end=a.end, class_id=a.class_id, score=a.score
        )


# -- requests / responses ---------------------------------------------------


class HealthResponse(BaseModel):
    status: str
    model_id: str


class ConvertRequest(BaseModel):
    name: str
    kind: Literal["entity", "relation"]
    splits: dict[str, list[SentenceRow]]
    split_classes: dict[str, list[str]]
    seed: Optional[int] = None


class ConvertResponse(BaseModel):
    splits: dict[str, list[SentenceRow]]
    report: dict


class StatsRequest(BaseModel):
    corpus: CorpusPayload
    kind: Literal["entity", "relation"] = "entity"


class VariationsRequest(BaseModel):
    label_class: ClassPayload
    kind: Literal["entity", "relation"] = "entity"
    strategy: str
    n: int = Field(ge=1)
    params: Optional[dict] = None
    generator: GeneratorPayload


class PredictRequest(BaseModel):
    corpus: CorpusPayload
    task: TaskPayload
    backend: BackendPayload
    pipeline_id: str = ""
    cache_dir: Optional[str] = None


class PredictResponse(BaseModel):
    predictions: PredictionPayload
    decoded_spans: Optional[list[list[AnnotationRow]]] = None
    decoded_labels: Optional[list[str]] = None


class RankRequest(BaseModel):
    class_id: str
    candidates: list[str]
    corpus: CorpusPayload
    task: TaskPayload
    backend: BackendPayload
    normalized: bool = True
    cache_dir: Optional[str] = None


class RankResponse(BaseModel):
    reports: list[dict]


class EnsembleEntitiesRequest(BaseModel):
    pipelines: list[PredictionPayload]
    task: TaskPayload
    config: EnsemblePayload = EnsemblePayload()


class EnsembleEntitiesResponse(BaseModel):
    annotations: list[list[AnnotationRow]]


class EnsembleRelationsRequest(BaseModel):
    pipelines: list[PredictionPayload]
    task: TaskPayload
    config: EnsemblePayload = EnsemblePayload()


class EnsembleRelationsResponse(BaseModel):
    labels: list[str]


class EvaluateEntitiesRequest(BaseModel):
    predictions: list[list[AnnotationRow]]
    gold: CorpusPayload
    task: TaskPayload


class EvaluateRelationsRequest(BaseModel):
    labels: list[str]
    gold: CorpusPayload
    task: TaskPayload


class CorrelationRequest(BaseModel):
    samples: dict[str, list[tuple[float, float]]]


class ErrorResponse(BaseModel):
    error: str
    detail: str
