"""Domain types shared by every module.

All types are immutable after construction and safe to share across
threads. Probability vectors index into the class order of a
:class:`TaskSpec`; for entity tasks the negative ("O") class is always
at index 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

from .errors import ValidationError

O_CLASS_ID = "O"

#: Maximum allowed deviation of a probability vector's sum from 1.
PROB_SUM_TOLERANCE = 1e-4


class TaskKind(str, Enum):
    ENTITY = "entity"
    RELATION = "relation"


class Split(str, Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


@dataclass(frozen=True)
class LabelClass:
    """A named entity or relation class with its textual description."""

    id: str
    name: str
    description: str
    kind: TaskKind = TaskKind.ENTITY

    def __post_init__(self):
        if not self.id:
            raise ValidationError("class id must be non-empty")
        if not self.description:
            raise ValidationError(f"class {self.id!r}: description must be non-empty")

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "description": self.description}


#: Description attached to the synthetic negative class of entity tasks.
O_CLASS_DESCRIPTION = "Tokens that are not part of any entity mention."

NO_RELATION_ID = "no_relation"


@dataclass(frozen=True)
class TaskSpec:
    """An ordered set of classes defining one classification task.

    Class order is stable: every probability vector in the system
    indexes into it. For entity tasks the O class sits at index 0.
    """

    kind: TaskKind
    classes: tuple[LabelClass, ...]
    includes_negative: bool

    def __post_init__(self):
        if not self.classes:
            raise ValidationError("a task needs at least one class")
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate class ids: {sorted(ids)}")
        if self.kind is TaskKind.ENTITY:
            if not self.includes_negative:
                raise ValidationError("entity tasks must include the O class")
            if ids[0] != O_CLASS_ID:
                raise ValidationError(f"entity tasks keep {O_CLASS_ID!r} at index 0, got {ids[0]!r}")

    @staticmethod
    def entity_task(classes: Sequence[LabelClass]) -> "TaskSpec":
        """Build an entity task, prepending the O class at index 0."""
        o_class = LabelClass(O_CLASS_ID, "O", O_CLASS_DESCRIPTION, TaskKind.ENTITY)
        return TaskSpec(TaskKind.ENTITY, (o_class, *classes), includes_negative=True)

    @staticmethod
    def relation_task(classes: Sequence[LabelClass], includes_negative: bool = False) -> "TaskSpec":
        if includes_negative:
            neg = LabelClass(NO_RELATION_ID, "no relation", "No relation holds between the entity pair.", TaskKind.RELATION)
            return TaskSpec(TaskKind.RELATION, (neg, *classes), includes_negative=True)
        return TaskSpec(TaskKind.RELATION, tuple(classes), includes_negative=False)

    @cached_property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.classes)

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def negative_index(self) -> Optional[int]:
        return 0 if self.includes_negative else None

    def index_of(self, class_id: str) -> int:
        try:
            return self.class_ids.index(class_id)
        except ValueError:
            raise ValidationError(f"unknown class id {class_id!r}") from None

    def positive_classes(self) -> tuple[LabelClass, ...]:
        """Classes excluding the negative one, in spec order."""
        return self.classes[1:] if self.includes_negative else self.classes

    def with_description(self, class_id: str, description: str) -> "TaskSpec":
        """A copy in which exactly one class's description is replaced."""
        idx = self.index_of(class_id)
        classes = list(self.classes)
        old = classes[idx]
        classes[idx] = LabelClass(old.id, old.name, description, old.kind)
        return TaskSpec(self.kind, tuple(classes), self.includes_negative)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "classes": [c.to_dict() for c in self.classes],
            "includes_negative": self.includes_negative,
        }


@dataclass(frozen=True)
class LabeledSpan:
    """A gold mention: token range [start, end) with its class."""

    start: int
    end: int
    class_id: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(f"invalid span [{self.start}, {self.end})")


@dataclass(frozen=True)
class RelationInstance:
    """Head/tail entity spans plus an optional gold relation label."""

    head: tuple[int, int]
    tail: tuple[int, int]
    relation_id: Optional[str] = None


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple[str, ...]
    gold_spans: tuple[LabeledSpan, ...] = ()
    relation_instance: Optional[RelationInstance] = None

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise ValidationError("a sentence needs at least one token")
        ordered = sorted(self.gold_spans, key=lambda s: s.start)
        for span in ordered:
            if span.end > n:
                raise ValidationError(f"span [{span.start}, {span.end}) exceeds {n} tokens")
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                raise ValidationError(f"overlapping gold spans {a} and {b}")
        if self.relation_instance is not None:
            for s, e in (self.relation_instance.head, self.relation_instance.tail):
                if not (0 <= s < e <= n):
                    raise ValidationError(f"entity span [{s}, {e}) out of range for {n} tokens")

    def token_labels(self, o_id: str = O_CLASS_ID) -> list[str]:
        """Per-token gold labels, O where no span covers the token."""
        labels = [o_id] * len(self.tokens)
        for span in self.gold_spans:
            for i in range(span.start, span.end):
                labels[i] = span.class_id
        return labels

    def to_dict(self) -> dict:
        """The normalized interchange row (one JSONL line per sentence)."""
        row: dict = {"tokens": list(self.tokens)}
        if self.gold_spans:
            row["spans"] = [
                {"start": s.start, "end": s.end, "label": s.class_id} for s in self.gold_spans
            ]
        if self.relation_instance is not None:
            ri = self.relation_instance
            row["head"] = list(ri.head)
            row["tail"] = list(ri.tail)
            if ri.relation_id is not None:
                row["relation"] = ri.relation_id
        return row

    @staticmethod
    def from_dict(row: dict) -> "TokenizedSentence":
        spans = tuple(
            LabeledSpan(s["start"], s["end"], s["label"]) for s in row.get("spans", ())
        )
        instance = None
        if "head" in row or "tail" in row:
            instance = RelationInstance(
                tuple(row["head"]), tuple(row["tail"]), row.get("relation")
            )
        return TokenizedSentence(tuple(row["tokens"]), spans, instance)


@dataclass(frozen=True)
class TokenizedCorpus:
    sentences: tuple[TokenizedSentence, ...]
    split: Split = Split.TEST
    name: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "split": self.split.value,
            "sentences": [s.to_dict() for s in self.sentences],
        }

    @staticmethod
    def from_dict(data: dict) -> "TokenizedCorpus":
        return TokenizedCorpus(
            tuple(TokenizedSentence.from_dict(row) for row in data["sentences"]),
            Split(data.get("split", "test")),
            data.get("name", ""),
        )


@dataclass(frozen=True)
class ProbVector:
    """A probability distribution over the classes of a TaskSpec.

    Values must be non-negative and sum to 1 within
    ``PROB_SUM_TOLERANCE``; construction fails otherwise.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValidationError("empty probability vector")
        total = 0.0
        for v in self.values:
            if not (v >= 0.0):  # also rejects NaN
                raise ValidationError(f"negative or non-finite probability {v!r}")
            total += v
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.values)

    def argmax(self) -> int:
        """Index of the largest probability; ties go to the lowest index."""
        best, best_v = 0, self.values[0]
        for i, v in enumerate(self.values):
            if v > best_v:
                best, best_v = i, v
        return best


@dataclass(frozen=True)
class SpanAnnotation:
    """A predicted mention with its class and confidence."""

    sentence_index: int
    start: int
    end: int
    class_id: str
    score: float

    def __post_init__(self):
        if self.start >= self.end:
            raise ValidationError(f"invalid span [{self.start}, {self.end})")
        if self.class_id == O_CLASS_ID:
            raise ValidationError("annotations never carry the O class")
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"score {self.score!r} outside [0, 1]")

    @property
    def extent(self) -> tuple[int, int]:
        return (self.start, self.end)


def decode_token_predictions(
    probs: Sequence[ProbVector],
    class_ids: Sequence[str],
    sentence_index: int = 0,
) -> list[SpanAnnotation]:
    """Turn per-token distributions into non-overlapping spans.

    Each token takes its argmax class (ties to the lowest index, i.e. O
    first); maximal runs of consecutive tokens sharing a non-O argmax
    become one span whose score is the mean winning probability.
    """
    if not probs:
        raise ValidationError("cannot decode an empty token sequence")
    if class_ids[0] != O_CLASS_ID:
        raise ValidationError("decoding expects the O class at index 0")
    for p in probs:
        if len(p) != len(class_ids):
            raise ValidationError(f"vector length {len(p)} != {len(class_ids)} classes")

    spans: list[SpanAnnotation] = []
    run_start = -1
    run_class = 0
    run_scores: list[float] = []

    def flush(end: int):
        if run_start >= 0:
            score = sum(run_scores) / len(run_scores)
            spans.append(SpanAnnotation(sentence_index, run_start, end, class_ids[run_class], score))

    for i, p in enumerate(probs):
        ci = p.argmax()
        if ci == 0:
            flush(i)
            run_start = -1
            continue
        if run_start >= 0 and ci == run_class:
            run_scores.append(p.values[ci])
        else:
            flush(i)
            run_start, run_class, run_scores = i, ci, [p.values[ci]]
    flush(len(probs))
    return spans


@dataclass(frozen=True)
class PredictionSet:
    """Probability output of one pipeline (one description variant set).

    Entity tasks carry one vector per token per sentence; relation
    tasks one vector per sentence. ``class_ids`` fixes the vector
    order; descriptions may differ between pipelines but the order may
    not.
    """

    pipeline_id: str
    kind: TaskKind
    class_ids: tuple[str, ...]
    token_probs: tuple[tuple[ProbVector, ...], ...] = ()
    instance_probs: tuple[ProbVector, ...] = ()

    def __post_init__(self):
        if self.kind is TaskKind.ENTITY:
            if self.instance_probs:
                raise ValidationError("entity prediction sets carry token_probs only")
            if self.class_ids and self.class_ids[0] != O_CLASS_ID:
                raise ValidationError("entity class order starts with O")
            rows = [p for sent in self.token_probs for p in sent]
        else:
            if self.token_probs:
                raise ValidationError("relation prediction sets carry instance_probs only")
            rows = list(self.instance_probs)
        for p in rows:
            if len(p) != len(self.class_ids):
                raise ValidationError(f"vector length {len(p)} != {len(self.class_ids)} classes")

    def __len__(self) -> int:
        return len(self.token_probs) if self.kind is TaskKind.ENTITY else len(self.instance_probs)

    @cached_property
    def decoded_spans(self) -> tuple[tuple[SpanAnnotation, ...], ...]:
        """Per-sentence span annotations (entity tasks)."""
        if self.kind is not TaskKind.ENTITY:
            raise ValidationError("decoded_spans applies to entity predictions")
        return tuple(
            tuple(decode_token_predictions(sent, self.class_ids, i))
            for i, sent in enumerate(self.token_probs)
        )

    @cached_property
    def decoded_labels(self) -> tuple[str, ...]:
        """Per-instance argmax class ids (relation tasks)."""
        if self.kind is not TaskKind.RELATION:
            raise ValidationError("decoded_labels applies to relation predictions")
        return tuple(self.class_ids[p.argmax()] for p in self.instance_probs)

    def to_dict(self) -> dict:
        out = {
            "pipeline_id": self.pipeline_id,
            "kind": self.kind.value,
            "class_ids": list(self.class_ids),
        }
        if self.kind is TaskKind.ENTITY:
            out["probs"] = [[list(p.values) for p in sent] for sent in self.token_probs]
        else:
            out["probs"] = [list(p.values) for p in self.instance_probs]
        return out

    @staticmethod
    def from_dict(data: dict) -> "PredictionSet":
        kind = TaskKind(data["kind"])
        class_ids = tuple(data["class_ids"])
        if kind is TaskKind.ENTITY:
            payload = tuple(
                tuple(ProbVector(tuple(v)) for v in sent) for sent in data["probs"]
            )
            return PredictionSet(data["pipeline_id"], kind, class_ids, token_probs=payload)
        payload = tuple(ProbVector(tuple(v)) for v in data["probs"])
        return PredictionSet(data["pipeline_id"], kind, class_ids, instance_probs=payload)
