"""Token-level entity metrics, instance-level relation metrics, and the
entropy-vs-performance correlation analysis.

Entity scoring expands predicted spans to per-token labels and pools
true/false positives over the non-O classes (micro), with macro-F1 the
unweighted mean of per-class F1. Relation scoring is plain multi-class
instance classification, where micro-F1 = accuracy = micro-recall and
the headline precision is the macro average.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .core import O_CLASS_ID, SpanAnnotation, TaskKind, TaskSpec, TokenizedCorpus
from .errors import CorpusMismatch, InsufficientSamples, ValidationError


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2 * precision * recall, precision + recall)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "support": self.support}


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    micro_f1: float
    macro_f1: float
    accuracy: float
    per_class: dict[str, ClassMetrics]

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "per_class": {cid: m.to_dict() for cid, m in self.per_class.items()},
        }


def _token_level_labels(
    pred: Sequence[Sequence[SpanAnnotation]], gold: TokenizedCorpus
) -> tuple[list[str], list[str]]:
    pred_labels: list[str] = []
    gold_labels: list[str] = []
    for si, sentence in enumerate(gold.sentences):
        n = len(sentence.tokens)
        row = [O_CLASS_ID] * n
        for span in pred[si]:
            if span.end > n:
                raise CorpusMismatch(f"predicted span {span} exceeds sentence {si} ({n} tokens)")
            for i in range(span.start, span.end):
                if row[i] != O_CLASS_ID:
                    raise ValidationError(f"overlapping predicted spans in sentence {si}")
                row[i] = span.class_id
        pred_labels.extend(row)
        gold_labels.extend(sentence.token_labels())
    return pred_labels, gold_labels


def entity_metrics(
    pred: Sequence[Sequence[SpanAnnotation]], gold: TokenizedCorpus, spec: TaskSpec
) -> EvalReport:
    """Token-level evaluation of predicted spans against gold spans.

    Precision/recall/micro-F1 pool counts over non-O classes; accuracy
    is the fraction of all tokens (O included) labeled correctly;
    zero-support classes contribute F1 = 0 to the macro average.
    """
    if len(pred) != len(gold.sentences):
        raise CorpusMismatch(f"{len(pred)} predicted sentences vs {len(gold.sentences)} gold")
    pred_labels, gold_labels = _token_level_labels(pred, gold)

    classes = [c.id for c in spec.positive_classes()]
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    correct = 0
    for p, g in zip(pred_labels, gold_labels):
        if p == g:
            correct += 1
        if p != O_CLASS_ID:
            if p not in tp:
                raise ValidationError(f"predicted label {p!r} not in the task spec")
            if p == g:
                tp[p] += 1
            else:
                fp[p] += 1
        if g != O_CLASS_ID and p != g:
            if g not in fn:
                raise ValidationError(f"gold label {g!r} not in the task spec")
            fn[g] += 1

    per_class = {}
    for c in classes:
        precision = _safe_div(tp[c], tp[c] + fp[c])
        recall = _safe_div(tp[c], tp[c] + fn[c])
        support = tp[c] + fn[c]
        per_class[c] = ClassMetrics(precision, recall, _f1(precision, recall), support)

    total_tp = sum(tp.values())
    micro_p = _safe_div(total_tp, total_tp + sum(fp.values()))
    micro_r = _safe_div(total_tp, total_tp + sum(fn.values()))
    return EvalReport(
        precision=micro_p,
        recall=micro_r,
        micro_f1=_f1(micro_p, micro_r),
        macro_f1=sum(m.f1 for m in per_class.values()) / len(per_class),
        accuracy=_safe_div(correct, len(gold_labels)),
        per_class=per_class,
    )


def relation_metrics(pred: Sequence[str], gold: TokenizedCorpus, spec: TaskSpec) -> EvalReport:
    """Instance-level multi-class metrics for relation predictions.

    For single-label classification the pooled micro statistics
    coincide: micro-F1 = accuracy = micro-recall. The reported
    ``precision`` is the macro average over relation classes.
    """
    if len(pred) != len(gold.sentences):
        raise CorpusMismatch(f"{len(pred)} predictions vs {len(gold.sentences)} instances")
    gold_labels = []
    for sentence in gold.sentences:
        ri = sentence.relation_instance
        if ri is None or ri.relation_id is None:
            raise ValidationError("every instance needs a gold relation label")
        gold_labels.append(ri.relation_id)

    classes = [c.id for c in spec.positive_classes()]
    known = set(classes)
    if spec.includes_negative:
        known.add(spec.class_ids[0])
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    correct = 0
    for p, g in zip(pred, gold_labels):
        if p not in known:
            raise ValidationError(f"predicted label {p!r} not in the task spec")
        if p == g:
            correct += 1
            if p in tp:
                tp[p] += 1
        else:
            if p in fp:
                fp[p] += 1
            if g in fn:
                fn[g] += 1

    per_class = {}
    for c in classes:
        precision = _safe_div(tp[c], tp[c] + fp[c])
        recall = _safe_div(tp[c], tp[c] + fn[c])
        per_class[c] = ClassMetrics(precision, recall, _f1(precision, recall), tp[c] + fn[c])

    accuracy = _safe_div(correct, len(gold_labels))
    return EvalReport(
        precision=sum(m.precision for m in per_class.values()) / len(per_class),
        recall=accuracy,
        micro_f1=accuracy,
        macro_f1=sum(m.f1 for m in per_class.values()) / len(per_class),
        accuracy=accuracy,
        per_class=per_class,
    )


# -- correlation analysis -------------------------------------------------


@dataclass(frozen=True)
class ClassCorrelation:
    class_id: str
    n_samples: int
    pearson_r: Optional[float]
    concordant: int
    discordant: int
    p_value: Optional[float]
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "n_samples": self.n_samples,
            "pearson_r": self.pearson_r,
            "concordant": self.concordant,
            "discordant": self.discordant,
            "p_value": self.p_value,
            "note": self.note,
        }


@dataclass(frozen=True)
class CorrelationReport:
    per_class: tuple[ClassCorrelation, ...]
    concordant: int
    discordant: int
    p_value: Optional[float]
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "per_class": [c.to_dict() for c in self.per_class],
            "concordant": self.concordant,
            "discordant": self.discordant,
            "p_value": self.p_value,
            "note": self.note,
        }


def sign_test_p_value(concordant: int, discordant: int) -> Optional[float]:
    """Exact two-sided binomial test of the discordant count under p=1/2.

    Returns None when there are no valid pairs.
    """
    n = concordant + discordant
    if n == 0:
        return None
    x = discordant
    denom = Fraction(1, 2) ** n
    lower = sum(math.comb(n, i) for i in range(0, x + 1)) * denom
    upper = sum(math.comb(n, i) for i in range(x, n + 1)) * denom
    return float(min(1, 2 * min(lower, upper)))


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return None
    return sxy / math.sqrt(sxx * syy)


def _pair_counts(samples: Sequence[tuple[float, float]]) -> tuple[int, int]:
    concordant = discordant = 0
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            dh = samples[i][0] - samples[j][0]
            df = samples[i][1] - samples[j][1]
            if dh == 0 or df == 0:
                continue
            if (dh > 0) == (df > 0):
                concordant += 1
            else:
                discordant += 1
    return concordant, discordant


def correlation_analysis(
    samples: Mapping[str, Sequence[tuple[float, float]]]
) -> CorrelationReport:
    """Per-class Pearson r plus a concordant/discordant-pair sign test
    over (entropy, macro-F1) samples, pooled into one aggregate p-value."""
    if not samples:
        raise InsufficientSamples("no classes to analyze")
    per_class = []
    total_c = total_d = 0
    for class_id, points in samples.items():
        if len(points) < 3:
            raise InsufficientSamples(f"class {class_id!r} has {len(points)} samples; need >= 3")
        entropies = [h for h, _ in points]
        f1s = [f for _, f in points]
        r = _pearson(entropies, f1s)
        concordant, discordant = _pair_counts(list(points))
        total_c += concordant
        total_d += discordant
        p = sign_test_p_value(concordant, discordant)
        note = None
        if p is None:
            note = "no valid pairs (constant entropy or constant macro-F1); p undefined"
        per_class.append(
            ClassCorrelation(class_id, len(points), r, concordant, discordant, p, note)
        )
    p_all = sign_test_p_value(total_c, total_d)
    note = None if p_all is not None else "no valid pairs in any class; p undefined"
    return CorrelationReport(tuple(per_class), total_c, total_d, p_all, note)


# -- figure data export ----------------------------------------------------

FIGURE_HEADER = ["class", "strategy", "variation_index", "entropy", "macro_f1"]


@dataclass(frozen=True)
class FigurePoint:
    class_id: str
    strategy: str
    variation_index: int
    entropy: float
    macro_f1: float


def export_figures_data(points: Sequence[FigurePoint], path: str | Path) -> None:
    """Write per-variation (entropy, macro-F1) scatter data as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIGURE_HEADER)
        for p in points:
            writer.writerow([p.class_id, p.strategy, p.variation_index, repr(p.entropy), repr(p.macro_f1)])


def read_figures_data(path: str | Path) -> list[FigurePoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != FIGURE_HEADER:
            raise ValidationError(f"unexpected figure CSV header {header!r}")
        return [FigurePoint(row[0], row[1], int(row[2]), float(row[3]), float(row[4])) for row in reader]
