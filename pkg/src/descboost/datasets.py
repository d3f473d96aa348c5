"""Corpus and description loading plus zero-shot dataset conversion.

The interchange format is JSONL, one sentence per line:
``{"tokens": [...], "spans": [{"start":, "end":, "label":}]}`` with
``{"head": [s,e], "tail": [s,e], "relation": id}`` added for relation
tasks. Import adapters for common upstream formats emit the same rows.

Zero-shot conversion makes split class sets disjoint: mentions labeled
with a class outside their split's set are relabeled O (entity tasks)
or their instance is dropped (relation tasks), and sentences left
without labels are removed.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping, Optional, Sequence

from .core import (
    LabelClass,
    LabeledSpan,
    RelationInstance,
    Split,
    TaskKind,
    TaskSpec,
    TokenizedCorpus,
    TokenizedSentence,
)
from .errors import ConfigError, ParseError, SchemaError, UnknownClass, ValidationError


@dataclass
class RawDataset:
    name: str
    kind: TaskKind
    splits: dict[Split, TokenizedCorpus]

    def label_inventory(self, split: Split) -> frozenset[str]:
        corpus = self.splits[split]
        if self.kind is TaskKind.ENTITY:
            return frozenset(s.class_id for sent in corpus.sentences for s in sent.gold_spans)
        return frozenset(
            sent.relation_instance.relation_id
            for sent in corpus.sentences
            if sent.relation_instance and sent.relation_instance.relation_id
        )


@dataclass
class SplitConversion:
    split: str
    sentences_before: int
    sentences_after: int
    mentions_before: dict[str, int]
    mentions_after: dict[str, int]
    removed_mentions: dict[str, int]

    @property
    def removed_sentences(self) -> int:
        return self.sentences_before - self.sentences_after

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "sentences_before": self.sentences_before,
            "sentences_after": self.sentences_after,
            "removed_sentences": self.removed_sentences,
            "mentions_before": self.mentions_before,
            "mentions_after": self.mentions_after,
            "removed_mentions": self.removed_mentions,
        }


@dataclass
class ConversionReport:
    dataset: str
    kind: str
    splits: list[SplitConversion]
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "kind": self.kind,
            "seed": self.seed,
            "splits": [s.to_dict() for s in self.splits],
        }


def _count_mentions(corpus: TokenizedCorpus, kind: TaskKind) -> dict[str, int]:
    counts: dict[str, int] = {}
    for sentence in corpus.sentences:
        if kind is TaskKind.ENTITY:
            for span in sentence.gold_spans:
                counts[span.class_id] = counts.get(span.class_id, 0) + 1
        elif sentence.relation_instance and sentence.relation_instance.relation_id:
            rid = sentence.relation_instance.relation_id
            counts[rid] = counts.get(rid, 0) + 1
    return counts


def zeroshot_convert(
    raw: RawDataset,
    split_classes: Mapping[Split, AbstractSet[str]],
    seed: Optional[int] = None,
) -> tuple[RawDataset, ConversionReport]:
    """Make the labeled class sets of the splits disjoint.

    Mentions of out-of-split classes become O (entity) or drop their
    instance (relation); label-empty sentences are removed. A label
    appearing in no split's class set raises UnknownClass.
    """
    known = set()
    for classes in split_classes.values():
        known.update(classes)
    converted: dict[Split, TokenizedCorpus] = {}
    reports: list[SplitConversion] = []
    for split, corpus in raw.splits.items():
        if split not in split_classes:
            raise ConfigError(f"no class set configured for split {split.value!r}")
        allowed = split_classes[split]
        before = _count_mentions(corpus, raw.kind)
        for label in before:
            if label not in known:
                raise UnknownClass(f"label {label!r} appears in no split's class set")
        kept: list[TokenizedSentence] = []
        removed: dict[str, int] = {}
        for sentence in corpus.sentences:
            if raw.kind is TaskKind.ENTITY:
                spans = tuple(s for s in sentence.gold_spans if s.class_id in allowed)
                for s in sentence.gold_spans:
                    if s.class_id not in allowed:
                        removed[s.class_id] = removed.get(s.class_id, 0) + 1
                if spans:
                    kept.append(TokenizedSentence(sentence.tokens, spans, sentence.relation_instance))
            else:
                ri = sentence.relation_instance
                rid = ri.relation_id if ri else None
                if rid is not None and rid in allowed:
                    kept.append(sentence)
                elif rid is not None:
                    removed[rid] = removed.get(rid, 0) + 1
        if not kept:
            raise ValidationError(f"split {split.value!r} is empty after conversion")
        new_corpus = TokenizedCorpus(tuple(kept), split, corpus.name)
        converted[split] = new_corpus
        reports.append(
            SplitConversion(
                split.value,
                len(corpus.sentences),
                len(kept),
                before,
                _count_mentions(new_corpus, raw.kind),
                removed,
            )
        )
    out = RawDataset(raw.name, raw.kind, converted)
    return out, ConversionReport(raw.name, raw.kind.value, reports, seed)


def random_relation_split(
    relation_ids: Iterable[str], sizes: tuple[int, int, int], seed: int
) -> dict[Split, frozenset[str]]:
    """Seeded random partition of relation ids into train/val/test sets."""
    ids = sorted(set(relation_ids))
    n_train, n_val, n_test = sizes
    if n_train + n_val + n_test != len(ids):
        raise ConfigError(f"split sizes {sizes} do not sum to {len(ids)} relations")
    rng = random.Random(seed)
    rng.shuffle(ids)
    return {
        Split.TRAIN: frozenset(ids[:n_train]),
        Split.VALIDATION: frozenset(ids[n_train : n_train + n_val]),
        Split.TEST: frozenset(ids[n_train + n_val :]),
    }


# -- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    mean: float
    max: int
    min: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "max": self.max, "min": self.min}


@dataclass(frozen=True)
class StatsReport:
    name: str
    split: str
    sentence_count: int
    class_mentions: dict[str, int]
    tokens_per_sentence: Summary
    mentions_per_sentence: Summary

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "split": self.split,
            "sentence_count": self.sentence_count,
            "class_mentions": self.class_mentions,
            "tokens_per_sentence": self.tokens_per_sentence.to_dict(),
            "mentions_per_sentence": self.mentions_per_sentence.to_dict(),
        }


def split_stats(corpus: TokenizedCorpus, kind: TaskKind = TaskKind.ENTITY) -> StatsReport:
    """Per-class mention counts plus token/mention length summaries."""
    if not corpus.sentences:
        raise ValidationError("cannot compute statistics of an empty corpus")
    token_counts = [len(s.tokens) for s in corpus.sentences]
    if kind is TaskKind.ENTITY:
        mention_counts = [len(s.gold_spans) for s in corpus.sentences]
    else:
        mention_counts = [1 if s.relation_instance else 0 for s in corpus.sentences]
    return StatsReport(
        corpus.name,
        corpus.split.value,
        len(corpus.sentences),
        _count_mentions(corpus, kind),
        Summary(sum(token_counts) / len(token_counts), max(token_counts), min(token_counts)),
        Summary(sum(mention_counts) / len(mention_counts), max(mention_counts), min(mention_counts)),
    )


# -- normalized JSONL and description files ---------------------------------


def load_corpus(path: str | Path, split: Split = Split.TEST, name: str = "") -> TokenizedCorpus:
    """Parse a normalized JSONL corpus; malformed rows report their line."""
    path = Path(path)
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict) or "tokens" not in row:
                raise SchemaError(f"{path}:{lineno}: missing 'tokens' field")
            try:
                sentences.append(TokenizedSentence.from_dict(row))
            except (ValidationError, KeyError, TypeError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    if not sentences:
        raise ParseError(str(path), 0, "empty corpus file")
    return TokenizedCorpus(tuple(sentences), split, name or path.stem)


def save_corpus(corpus: TokenizedCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in corpus.sentences:
            fh.write(json.dumps(sentence.to_dict(), ensure_ascii=False) + "\n")


def load_descriptions(path: str | Path) -> dict[str, str]:
    """A JSON object {class_id: description}; empty values are an error."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: expected a JSON object of class_id -> description")
    for class_id, text in data.items():
        if not isinstance(text, str) or not text.strip():
            raise SchemaError(f"{path}: class {class_id!r} has an empty description")
    return dict(data)


def build_task_spec(
    kind: TaskKind,
    descriptions: Mapping[str, str],
    class_ids: Optional[Sequence[str]] = None,
    names: Optional[Mapping[str, str]] = None,
) -> TaskSpec:
    """Assemble a TaskSpec from a description map; order defaults to the
    sorted class ids so specs are reproducible."""
    ids = list(class_ids) if class_ids is not None else sorted(descriptions)
    classes = []
    for cid in ids:
        if cid not in descriptions:
            raise UnknownClass(f"class {cid!r} has no description")
        name = names.get(cid, cid) if names else cid
        classes.append(LabelClass(cid, name, descriptions[cid], kind))
    if kind is TaskKind.ENTITY:
        return TaskSpec.entity_task(classes)
    return TaskSpec.relation_task(classes)


# -- import adapters ---------------------------------------------------------


def parse_conll2012(
    text: str, token_column: int = 3, entity_column: int = 10
) -> list[TokenizedSentence]:
    """CoNLL-2012 column format with parenthesized named-entity tags."""
    sentences = []
    tokens: list[str] = []
    spans: list[LabeledSpan] = []
    open_label: Optional[str] = None
    open_start = 0

    def flush():
        nonlocal tokens, spans, open_label
        if open_label is not None:
            raise SchemaError(f"unclosed entity {open_label!r} at sentence end")
        if tokens:
            sentences.append(TokenizedSentence(tuple(tokens), tuple(spans)))
        tokens, spans = [], []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip()
        if line.startswith("#begin") or line.startswith("#end"):
            continue
        if not line:
            flush()
            continue
        cols = line.split()
        if len(cols) <= max(token_column, entity_column):
            raise SchemaError(f"line {lineno}: expected at least {entity_column + 1} columns")
        tokens.append(cols[token_column])
        tag = cols[entity_column]
        idx = len(tokens) - 1
        if re.fullmatch(r"\(\w+\*?\)?|\*\)?", tag) is None:
            raise SchemaError(f"line {lineno}: unrecognized entity tag {tag!r}")
        if tag.startswith("("):
            label = tag.strip("()*")
            if open_label is not None:
                raise SchemaError(f"line {lineno}: nested entity tags are not supported")
            if tag.endswith(")"):
                spans.append(LabeledSpan(idx, idx + 1, label))
            else:
                open_label, open_start = label, idx
        elif tag.endswith(")"):
            if open_label is None:
                raise SchemaError(f"line {lineno}: closing tag without an open entity")
            spans.append(LabeledSpan(open_start, idx + 1, open_label))
            open_label = None
    flush()
    return sentences


def parse_pubtator(text: str) -> list[TokenizedSentence]:
    """PubTator abstracts: title/abstract lines plus char-offset mentions.

    Documents become one row each (title and abstract joined by a
    space, whitespace-tokenized); mention offsets snap to the covering
    tokens.
    """
    sentences = []
    for block in re.split(r"\n\s*\n", text.strip()):
        if not block.strip():
            continue
        title = abstract = None
        mentions = []
        for lineno, line in enumerate(block.splitlines(), start=1):
            if "|t|" in line:
                title = line.split("|t|", 1)[1]
            elif "|a|" in line:
                abstract = line.split("|a|", 1)[1]
            elif line.strip():
                cols = line.split("\t")
                if len(cols) < 5:
                    raise SchemaError(f"mention line {lineno}: expected 5+ tab-separated columns")
                mentions.append((int(cols[1]), int(cols[2]), cols[4].split(",")[0]))
        if title is None:
            raise SchemaError("document block without a |t| title line")
        full = title if abstract is None else f"{title} {abstract}"
        tokens = full.split()
        offsets = []
        pos = 0
        for tok in tokens:
            start = full.index(tok, pos)
            offsets.append((start, start + len(tok)))
            pos = start + len(tok)
        spans = []
        for start, end, label in mentions:
            covered = [i for i, (s, e) in enumerate(offsets) if s < end and start < e]
            if covered:
                spans.append(LabeledSpan(covered[0], covered[-1] + 1, label))
        spans.sort(key=lambda s: s.start)
        merged = [s for i, s in enumerate(spans) if i == 0 or s.start >= spans[i - 1].end]
        sentences.append(TokenizedSentence(tuple(tokens), tuple(merged)))
    return sentences


def parse_fewrel(data: Mapping[str, list]) -> list[TokenizedSentence]:
    """FewRel JSON: {relation_id: [{tokens, h: [..., [[idx..]]], t: ...}]}."""
    sentences = []
    for relation_id, examples in data.items():
        for example in examples:
            tokens = tuple(example["tokens"])
            head_idx = sorted(example["h"][2][0])
            tail_idx = sorted(example["t"][2][0])
            instance = RelationInstance(
                (head_idx[0], head_idx[-1] + 1),
                (tail_idx[0], tail_idx[-1] + 1),
                relation_id,
            )
            sentences.append(TokenizedSentence(tokens, (), instance))
    return sentences


def parse_wiki_relations(rows: Sequence[Mapping]) -> list[TokenizedSentence]:
    """Wikidata relation rows: {tokens, edgeSet: [{left, right, kbID}]}."""
    sentences = []
    for row in rows:
        tokens = tuple(row["tokens"])
        for edge in row.get("edgeSet", []):
            left = sorted(edge["left"])
            right = sorted(edge["right"])
            instance = RelationInstance(
                (left[0], left[-1] + 1), (right[0], right[-1] + 1), edge["kbID"]
            )
            sentences.append(TokenizedSentence(tokens, (), instance))
    return sentences
