"""Combine prediction pipelines built from different description variants.

Entity ensembling is a span-level vote: a pipeline votes for
(span, class) when it decoded that span or any sub-span of it with that
class, at most once per cell. Candidate spans are resolved longest
first; an emitted span blocks everything overlapping it, so the output
is always non-overlapping and nesting-free. Relation ensembling is a
per-instance plurality vote.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .core import PredictionSet, SpanAnnotation, TaskKind, TaskSpec
from .errors import CorpusMismatch, ValidationError

Extent = tuple[int, int]


class TieBreak(str, Enum):
    LOWEST_CLASS_INDEX = "lowest_class_index"
    HIGHEST_MEAN_SCORE = "highest_mean_score"


@dataclass(frozen=True)
class EnsembleConfig:
    min_votes: int = 1
    tie_break: TieBreak = TieBreak.HIGHEST_MEAN_SCORE

    def __post_init__(self):
        if self.min_votes < 1:
            raise ValidationError("min_votes must be >= 1")


@dataclass
class SpanVotes:
    votes: int = 0
    scores: list[float] = field(default_factory=list)

    @property
    def mean_score(self) -> float:
        # sorted before summing so the result is pipeline-order independent
        return sum(sorted(self.scores)) / len(self.scores) if self.scores else 0.0


@dataclass
class VoteTable:
    """Per sentence: (span extent, class_id) -> accumulated votes."""

    sentences: list[dict[Extent, dict[str, SpanVotes]]]

    def votes(self, sentence_index: int, extent: Extent, class_id: str) -> int:
        cell = self.sentences[sentence_index].get(extent, {}).get(class_id)
        return cell.votes if cell else 0


def _check_entity_pipelines(pipelines: Sequence[PredictionSet]) -> None:
    if not pipelines:
        raise ValidationError("need at least one pipeline")
    first = pipelines[0]
    for other in pipelines[1:]:
        if other.class_ids != first.class_ids:
            raise CorpusMismatch("pipelines disagree on class order")
        if len(other.token_probs) != len(first.token_probs):
            raise CorpusMismatch("pipelines cover different sentence counts")
        for a, b in zip(first.token_probs, other.token_probs):
            if len(a) != len(b):
                raise CorpusMismatch("pipelines cover different token counts")
    if first.kind is not TaskKind.ENTITY:
        raise ValidationError("entity ensembling needs entity prediction sets")


def vote_counts(pipelines: Sequence[PredictionSet]) -> VoteTable:
    """Accumulate votes: pipeline P votes for (s, e) when it decoded some
    span (s', e) with s' contained in s; one vote per pipeline per cell."""
    _check_entity_pipelines(pipelines)
    sentences: list[dict[Extent, dict[str, SpanVotes]]] = []
    for si in range(len(pipelines[0].token_probs)):
        decoded = [pl.decoded_spans[si] for pl in pipelines]
        extents = sorted({span.extent for spans in decoded for span in spans})
        cells: dict[Extent, dict[str, SpanVotes]] = {}
        for extent in extents:
            by_class: dict[str, SpanVotes] = {}
            for spans in decoded:
                best: dict[str, float] = {}
                for span in spans:
                    if span.start >= extent[0] and span.end <= extent[1]:
                        if span.class_id not in best or span.score > best[span.class_id]:
                            best[span.class_id] = span.score
                for class_id, score in best.items():
                    cell = by_class.setdefault(class_id, SpanVotes())
                    cell.votes += 1
                    cell.scores.append(score)
            cells[extent] = by_class
        sentences.append(cells)
    return VoteTable(sentences)


def _winning_class(
    by_class: dict[str, SpanVotes], class_order: Sequence[str], tie_break: TieBreak
) -> tuple[str, SpanVotes]:
    top = max(cell.votes for cell in by_class.values())
    tied = [cid for cid, cell in by_class.items() if cell.votes == top]
    if len(tied) > 1 and tie_break is TieBreak.HIGHEST_MEAN_SCORE:
        best_score = max(by_class[cid].mean_score for cid in tied)
        tied = [cid for cid in tied if by_class[cid].mean_score == best_score]
    winner = min(tied, key=class_order.index)
    return winner, by_class[winner]


def ensemble_entities(
    pipelines: Sequence[PredictionSet],
    spec: TaskSpec,
    cfg: EnsembleConfig = EnsembleConfig(),
) -> tuple[tuple[SpanAnnotation, ...], ...]:
    """Resolve the vote table into one non-overlapping annotation set.

    Per sentence: candidates are processed by descending length, then
    descending top vote count, then ascending start; an unblocked
    candidate whose winning class reaches min_votes is emitted and
    blocks every overlapping candidate.
    """
    table = vote_counts(pipelines)
    class_order = list(spec.class_ids)
    result = []
    for si, cells in enumerate(table.sentences):
        ordered = sorted(
            cells.keys(),
            key=lambda ext: (
                -(ext[1] - ext[0]),
                -max(cell.votes for cell in cells[ext].values()),
                ext[0],
            ),
        )
        emitted: list[SpanAnnotation] = []
        for extent in ordered:
            if any(extent[0] < got.end and got.start < extent[1] for got in emitted):
                continue
            winner, cell = _winning_class(cells[extent], class_order, cfg.tie_break)
            if cell.votes >= cfg.min_votes:
                score = min(1.0, cell.mean_score)
                emitted.append(SpanAnnotation(si, extent[0], extent[1], winner, score))
        result.append(tuple(sorted(emitted, key=lambda a: a.start)))
    return tuple(result)


def ensemble_relations(
    pipelines: Sequence[PredictionSet],
    spec: TaskSpec,
    cfg: EnsembleConfig = EnsembleConfig(),
) -> tuple[str, ...]:
    """Plurality vote over per-pipeline argmax labels, ties broken by the
    highest mean predicted probability, then the lowest class index."""
    if not pipelines:
        raise ValidationError("need at least one pipeline")
    first = pipelines[0]
    if first.kind is not TaskKind.RELATION:
        raise ValidationError("relation ensembling needs relation prediction sets")
    for other in pipelines[1:]:
        if other.class_ids != first.class_ids:
            raise CorpusMismatch("pipelines disagree on class order")
        if len(other.instance_probs) != len(first.instance_probs):
            raise CorpusMismatch("pipelines cover different instance counts")

    class_order = list(spec.class_ids)
    labels_out = []
    for i in range(len(first.instance_probs)):
        counts: dict[str, int] = {}
        for pl in pipelines:
            label = pl.decoded_labels[i]
            counts[label] = counts.get(label, 0) + 1
        top = max(counts.values())
        tied = [label for label, n in counts.items() if n == top]
        if len(tied) > 1:
            def mean_prob(label: str) -> float:
                idx = class_order.index(label)
                return sum(sorted(pl.instance_probs[i].values[idx] for pl in pipelines)) / len(pipelines)

            best = max(mean_prob(label) for label in tied)
            tied = [label for label in tied if mean_prob(label) == best]
        labels_out.append(min(tied, key=class_order.index))
    return tuple(labels_out)
