"""End-to-end run orchestration: convert, generate, predict per
pipeline, ensemble, evaluate, analyze, manifest.

The runner is a client of the engine service; it owns only local file
I/O and sequencing. Every JSON artifact embeds the config hash and
seed, and the manifest lists the SHA-256 of every artifact so a rerun
can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

from . import __version__
from .client import EngineClient
from .config import RunConfig
from .core import Split
from .datasets import load_corpus, load_descriptions
from .errors import ConfigError, InsufficientSamples, NotFound
from .evaluation import FigurePoint, export_figures_data
from .vargen import VariationArchive, VariationSet, VariationStrategy

#: Cache pipeline id used for per-candidate ranking predictions; shared
#: between /rank and the analyze step so both hit the same entries.
RANK_PIPELINE_PREFIX = "rank:"


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload: dict, config: RunConfig) -> None:
    body = {"config_hash": config.config_hash, "seed": config.seed}
    body.update(payload)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _corpus_payload(rows: list[dict], split: str, name: str) -> dict:
    return {"name": name, "split": split, "sentences": rows}


def load_split_rows(config: RunConfig, split: str) -> list[dict]:
    corpus = load_corpus(config.corpus_path(split), Split(split), config.dataset_name)
    return [s.to_dict() for s in corpus.sentences]


def load_class_descriptions(config: RunConfig) -> dict[str, str]:
    descriptions = load_descriptions(config.path(config.descriptions))
    missing = [c for c in config.eval_classes if c not in descriptions]
    if missing:
        raise ConfigError(f"descriptions file lacks classes: {missing}")
    return descriptions


def class_payloads(config: RunConfig, descriptions: dict[str, str]) -> list[dict]:
    names = config.class_names or {}
    return [
        {"id": cid, "name": names.get(cid, cid), "description": descriptions[cid]}
        for cid in config.eval_classes
    ]


def task_payload(config: RunConfig, classes: list[dict]) -> dict:
    return {"kind": config.task, "classes": classes, "includes_negative": False}


def convert_dataset(config: RunConfig, client: EngineClient, out_dir: Path) -> dict:
    """Run zero-shot conversion and write converted splits + report."""
    splits = {split: load_split_rows(config, split) for split in config.split_classes}
    response = client.convert(
        config.dataset_name, config.task, splits, config.split_classes, config.seed
    )
    for split, rows in sorted(response["splits"].items()):
        _write_jsonl(out_dir / "converted" / f"{split}.jsonl", _strip_nulls(rows))
    _write_json(out_dir / "conversion_report.json", {"report": response["report"]}, config)
    return response


def _strip_nulls(rows: list[dict]) -> list[dict]:
    return [{k: v for k, v in row.items() if v is not None} for row in rows]


def generate_all_variations(
    config: RunConfig, client: EngineClient, classes: list[dict], out_dir: Path
) -> dict[str, dict[str, list[str]]]:
    """Populate the variation archive: class -> strategy -> texts."""
    archive = VariationArchive(out_dir / "variations")
    out: dict[str, dict[str, list[str]]] = {}
    for cls in classes:
        out[cls["id"]] = {}
        for strategy, n in config.strategies.items():
            result = client.generate_variations(
                cls,
                config.task,
                strategy,
                n,
                config.generator,
                config.generation_params.get(strategy),
            )
            archive.store(config.dataset_name, VariationSet.from_dict(result))
            out[cls["id"]][strategy] = [v["text"] for v in result["variations"]]
    return out


def load_archived_variations(config: RunConfig, out_dir: Path) -> dict[str, dict[str, list[str]]]:
    archive = VariationArchive(out_dir / "variations")
    out: dict[str, dict[str, list[str]]] = {}
    for cid in config.eval_classes:
        out[cid] = {}
        for strategy in config.strategies:
            vs = archive.load(config.dataset_name, cid, VariationStrategy(strategy))
            out[cid][strategy] = vs.texts()
    return out


def pipeline_ids(config: RunConfig) -> list[str]:
    ids = ["original"] if config.include_original else []
    for strategy, n in config.strategies.items():
        ids.extend(f"{strategy}-{i:02d}" for i in range(n))
    return ids


def pipeline_task(
    config: RunConfig,
    pipeline_id: str,
    classes: list[dict],
    variations: dict[str, dict[str, list[str]]],
) -> dict:
    """Task payload for one pipeline: every class takes its variation of
    that pipeline's strategy/index; 'original' keeps the source texts."""
    if pipeline_id == "original":
        return task_payload(config, classes)
    strategy, _, index = pipeline_id.rpartition("-")
    if strategy not in config.strategies or not index.isdigit():
        raise ConfigError(f"unknown pipeline id {pipeline_id!r}; expected one of {pipeline_ids(config)}")
    i = int(index)
    swapped = []
    for cls in classes:
        texts = variations[cls["id"]][strategy]
        if i >= len(texts):
            raise NotFound(f"class {cls['id']!r} has no variation {i} for strategy {strategy!r}")
        swapped.append({**cls, "description": texts[i]})
    return task_payload(config, swapped)


def run_pipeline(
    config: RunConfig,
    client: EngineClient,
    output_dir: Optional[Path] = None,
    do_analyze: bool = True,
) -> dict:
    """The full chain; returns the manifest dict (also written to disk)."""
    out_dir = Path(output_dir) if output_dir else config.path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = str(config.path(config.cache_dir))
    kind = config.task

    converted = convert_dataset(config, client, out_dir)
    gold_rows = _strip_nulls(converted["splits"][config.eval_split])
    gold_payload = _corpus_payload(gold_rows, config.eval_split, config.dataset_name)

    descriptions = load_class_descriptions(config)
    classes = class_payloads(config, descriptions)
    variations = generate_all_variations(config, client, classes, out_dir)

    pipelines = []
    for pid in pipeline_ids(config):
        task = pipeline_task(config, pid, classes, variations)
        response = client.predict(kind, gold_payload, task, config.predictor, pid, cache_dir)
        _write_json(out_dir / "predictions" / f"{pid}.json", response, config)
        pipelines.append(response["predictions"])

    base_task = task_payload(config, classes)
    ensemble_response = client.ensemble(kind, pipelines, base_task, config.ensemble)
    if kind == "entity":
        annotations = ensemble_response["annotations"]
        rows = []
        for sentence_rows, gold_row in zip(annotations, gold_rows):
            rows.append(
                {
                    "tokens": gold_row["tokens"],
                    "spans": [
                        {"start": a["start"], "end": a["end"], "label": a["class_id"]}
                        for a in sentence_rows
                    ],
                }
            )
        _write_jsonl(out_dir / "ensemble.jsonl", rows)
        eval_report = client.evaluate_entities(annotations, gold_payload, base_task)
    else:
        labels = ensemble_response["labels"]
        rows = []
        for label, gold_row in zip(labels, gold_rows):
            rows.append(
                {
                    "tokens": gold_row["tokens"],
                    "head": gold_row["head"],
                    "tail": gold_row["tail"],
                    "relation": label,
                }
            )
        _write_jsonl(out_dir / "ensemble.jsonl", rows)
        eval_report = client.evaluate_relations(labels, gold_payload, base_task)
    _write_json(out_dir / "eval_report.json", {"report": eval_report}, config)

    if do_analyze:
        analyze(config, client, classes, variations, gold_payload, out_dir, cache_dir)

    manifest = {
        "engine": f"descboost/{__version__}",
        "config_hash": config.config_hash,
        "seed": config.seed,
        "task": config.task,
        "dataset": config.dataset_name,
        "include_original": config.include_original,
        "pipelines": pipeline_ids(config),
        "artifacts": {},
    }
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name not in ("manifest.json",) and path.suffix != ".lock":
            manifest["artifacts"][str(path.relative_to(out_dir))] = _sha256_file(path)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def analyze(
    config: RunConfig,
    client: EngineClient,
    classes: list[dict],
    variations: dict[str, dict[str, list[str]]],
    gold_payload: dict,
    out_dir: Path,
    cache_dir: str,
) -> dict:
    """Per-class (entropy, macro-F1) samples over all variations, with
    the correlation report and the figure CSV as artifacts."""
    kind = config.task
    base_classes = {cls["id"]: cls for cls in classes}
    points: list[FigurePoint] = []
    samples: dict[str, list[tuple[float, float]]] = {}
    for cls in classes:
        cid = cls["id"]
        candidates = []
        for strategy in config.strategies:
            for i, text in enumerate(variations[cid][strategy]):
                candidates.append((strategy, i, text))
        if not candidates:
            continue
        reports = client.rank(
            cid,
            [text for _, _, text in candidates],
            gold_payload,
            task_payload(config, classes),
            config.predictor,
            config.normalized_entropy,
            cache_dir,
        )
        entropy_by_text = {r["description"]: r["corpus_entropy"] for r in reports}
        class_samples = []
        for strategy, i, text in candidates:
            entropy = entropy_by_text.get(text)
            if entropy is None:
                continue
            swapped = [dict(c) if c["id"] != cid else {**base_classes[cid], "description": text} for c in classes]
            response = client.predict(
                kind,
                gold_payload,
                task_payload(config, swapped),
                config.predictor,
                f"{RANK_PIPELINE_PREFIX}{cid}",
                cache_dir,
            )
            if kind == "entity":
                report = client.evaluate_entities(
                    response["decoded_spans"], gold_payload, task_payload(config, swapped)
                )
            else:
                report = client.evaluate_relations(
                    response["decoded_labels"], gold_payload, task_payload(config, swapped)
                )
            macro_f1 = report["macro_f1"]
            points.append(FigurePoint(cid, strategy, i, entropy, macro_f1))
            class_samples.append((entropy, macro_f1))
        samples[cid] = class_samples

    export_figures_data(points, out_dir / "figures.csv")
    try:
        correlation = client.analyze_correlation(samples)
    except InsufficientSamples as exc:
        correlation = {"note": str(exc), "p_value": None, "per_class": []}
    _write_json(out_dir / "correlation_report.json", {"report": correlation}, config)
    return correlation
