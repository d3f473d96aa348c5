"""Command-line surface: a thin client of the engine service.

Without --endpoint (or DESCBOOST_ENDPOINT) the engine runs in-process;
with one, every command speaks HTTP to a shared instance. Exit codes:
1 config, 2 IO/parsing, 3 service, 4 data mismatch.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .client import EngineClient
from .config import RunConfig, load_config
from .core import Split
from .datasets import load_corpus
from .errors import ConfigError, DescboostError
from .runner import (
    class_payloads,
    generate_all_variations,
    load_archived_variations,
    load_class_descriptions,
    pipeline_task,
    run_pipeline,
    task_payload,
)

_ENDPOINT_ENVVAR = "DESCBOOST_ENDPOINT"
_TOKEN_ENVVAR = "DESCBOOST_TOKEN"


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DescboostError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except httpx.HTTPError as exc:
            click.echo(f"service error: {exc}", err=True)
            sys.exit(3)
        except OSError as exc:
            click.echo(f"io error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _client(ctx: click.Context) -> EngineClient:
    return EngineClient(ctx.obj.get("endpoint"), ctx.obj.get("token"))


def _echo_report(payload: dict, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in _text_lines(payload):
            click.echo(line)


def _text_lines(payload: dict, prefix: str = "") -> list[str]:
    lines = []
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f"{prefix}{key}:")
            lines.extend(_text_lines(value, prefix + "  "))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{prefix}{key}:")
            for item in value:
                lines.extend(_text_lines(item, prefix + "  - "))
        else:
            lines.append(f"{prefix}{key}: {value}")
    return lines


format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "text"]), default="text", show_default=True
)


@click.group()
@click.version_option(__version__)
@click.option("--endpoint", envvar=_ENDPOINT_ENVVAR, default=None, help="Engine service URL; in-process when omitted.")
@click.option("--token", envvar=_TOKEN_ENVVAR, default=None, help="Bearer token for the engine service.")
@click.pass_context
def main(ctx: click.Context, endpoint: str | None, token: str | None):
    ctx.ensure_object(dict)
    ctx.obj["endpoint"] = endpoint
    ctx.obj["token"] = token


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8800, show_default=True)
@_handle_errors
def serve(host: str, port: int):
    """Run the engine service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("convert-dataset")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--splits-map", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["entity", "relation"]), default="entity", show_default=True)
@click.option("--name", default="dataset", show_default=True)
@click.option("--seed", type=int, default=None)
@format_option
@click.pass_context
@_handle_errors
def convert_dataset_cmd(ctx, in_dir, out_dir, splits_map, kind, name, seed, fmt):
    """Zero-shot convert the JSONL splits found in --in."""
    split_classes = json.loads(Path(splits_map).read_text(encoding="utf-8"))
    splits = {}
    for split in split_classes:
        path = Path(in_dir) / f"{split}.jsonl"
        if not path.exists():
            raise ConfigError(f"missing corpus file {path}")
        corpus = load_corpus(path, Split(split), name)
        splits[split] = [s.to_dict() for s in corpus.sentences]
    with _client(ctx) as client:
        response = client.convert(name, kind, splits, split_classes, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split, rows in sorted(response["splits"].items()):
        with open(out / f"{split}.jsonl", "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps({k: v for k, v in row.items() if v is not None}, ensure_ascii=False, sort_keys=True) + "\n")
    (out / "conversion_report.json").write_text(
        json.dumps(response["report"], indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _echo_report(response["report"], fmt)


@main.command("generate-variations")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_handle_errors
def generate_variations_cmd(ctx, config_path):
    """Populate the variation archive for every class and strategy."""
    config = load_config(config_path)
    out_dir = config.path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    descriptions = load_class_descriptions(config)
    classes = class_payloads(config, descriptions)
    with _client(ctx) as client:
        variations = generate_all_variations(config, client, classes, out_dir)
    total = sum(len(texts) for by_strategy in variations.values() for texts in by_strategy.values())
    click.echo(f"archived {total} variations for {len(classes)} classes in {out_dir / 'variations'}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pipeline", "pipeline_id", required=True)
@click.pass_context
@_handle_errors
def predict(ctx, config_path, pipeline_id):
    """Run one prediction pipeline (cached) and store its output."""
    config = load_config(config_path)
    out_dir = config.path(config.output_dir)
    descriptions = load_class_descriptions(config)
    classes = class_payloads(config, descriptions)
    variations = load_archived_variations(config, out_dir) if pipeline_id != "original" else {}
    task = pipeline_task(config, pipeline_id, classes, variations)
    corpus = load_corpus(config.corpus_path(config.eval_split), Split(config.eval_split), config.dataset_name)
    payload = {"name": config.dataset_name, "split": config.eval_split, "sentences": [s.to_dict() for s in corpus.sentences]}
    with _client(ctx) as client:
        response = client.predict(
            config.task, payload, task, config.predictor, pipeline_id, str(config.path(config.cache_dir))
        )
    out_path = out_dir / "predictions" / f"{pipeline_id}.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config_hash": config.config_hash, "seed": config.seed}
    body.update(response)
    out_path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "class_id", required=True)
@click.option("--include-original/--no-include-original", default=True, show_default=True)
@format_option
@click.pass_context
@_handle_errors
def rank(ctx, config_path, class_id, include_original, fmt):
    """Rank the archived description variations of one class by entropy."""
    config = load_config(config_path)
    if class_id not in config.eval_classes:
        raise ConfigError(f"class {class_id!r} not in eval split classes {config.eval_classes}")
    out_dir = config.path(config.output_dir)
    descriptions = load_class_descriptions(config)
    classes = class_payloads(config, descriptions)
    variations = load_archived_variations(config, out_dir)
    candidates = []
    if include_original:
        candidates.append(descriptions[class_id])
    for strategy in config.strategies:
        candidates.extend(variations[class_id][strategy])
    corpus = load_corpus(config.corpus_path(config.eval_split), Split(config.eval_split), config.dataset_name)
    payload = {"name": config.dataset_name, "split": config.eval_split, "sentences": [s.to_dict() for s in corpus.sentences]}
    with _client(ctx) as client:
        reports = client.rank(
            class_id,
            candidates,
            payload,
            task_payload(config, classes),
            config.predictor,
            config.normalized_entropy,
            str(config.path(config.cache_dir)),
        )
    _echo_report({"reports": reports}, fmt)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@_handle_errors
def ensemble(ctx, config_path):
    """Predict every pipeline, combine them, and write the annotations."""
    config = load_config(config_path)
    with _client(ctx) as client:
        manifest = run_pipeline(config, client, do_analyze=False)
    click.echo(f"ensemble written under {config.path(config.output_dir)} ({len(manifest['pipelines'])} pipelines)")


@main.command()
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--task", "task_kind", type=click.Choice(["entity", "relation"]), required=True)
@click.option("--classes", "classes_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Optional JSON list pinning the class set; defaults to the labels observed in gold and pred.")
@format_option
@click.pass_context
@_handle_errors
def evaluate(ctx, pred_path, gold_path, task_kind, classes_path, fmt):
    """Score a predictions JSONL file against a gold JSONL file."""
    gold = load_corpus(gold_path, Split.TEST, "gold")
    pred = load_corpus(pred_path, Split.TEST, "pred")
    if classes_path:
        class_ids = json.loads(Path(classes_path).read_text(encoding="utf-8"))
    else:
        observed = set()
        for corpus in (gold, pred):
            for sentence in corpus.sentences:
                observed.update(s.class_id for s in sentence.gold_spans)
                if sentence.relation_instance and sentence.relation_instance.relation_id:
                    observed.add(sentence.relation_instance.relation_id)
        class_ids = sorted(observed)
    task = {
        "kind": task_kind,
        "classes": [{"id": c, "name": c, "description": c} for c in class_ids],
        "includes_negative": False,
    }
    gold_payload = {"name": "gold", "split": "test", "sentences": [s.to_dict() for s in gold.sentences]}
    with _client(ctx) as client:
        if task_kind == "entity":
            predictions = [
                [
                    {"sentence_index": i, "start": s.start, "end": s.end, "class_id": s.class_id, "score": 1.0}
                    for s in sentence.gold_spans
                ]
                for i, sentence in enumerate(pred.sentences)
            ]
            report = client.evaluate_entities(predictions, gold_payload, task)
        else:
            labels = [
                sentence.relation_instance.relation_id if sentence.relation_instance else ""
                for sentence in pred.sentences
            ]
            report = client.evaluate_relations(labels, gold_payload, task)
    _echo_report(report, fmt)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.pass_context
@_handle_errors
def analyze(ctx, config_path, fmt):
    """Correlation analysis over archived variations (runs the chain)."""
    config = load_config(config_path)
    with _client(ctx) as client:
        run_pipeline(config, client)
    report_path = config.path(config.output_dir) / "correlation_report.json"
    _echo_report(json.loads(report_path.read_text(encoding="utf-8")), fmt)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@format_option
@click.pass_context
@_handle_errors
def run(ctx, config_path, fmt):
    """Full chain: convert, generate, predict, ensemble, evaluate, analyze."""
    config = load_config(config_path)
    with _client(ctx) as client:
        manifest = run_pipeline(config, client)
    _echo_report(manifest, fmt)


if __name__ == "__main__":
    main()
