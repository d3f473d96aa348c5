"""FastAPI service exposing the engine operations.

The service is stateless compute: corpora, task specs and prediction
sets travel in request bodies, so any number of clients can share one
instance. Only the prediction cache touches the filesystem, rooted at
the caller-supplied cache_dir (or DESCBOOST_CACHE_DIR).
"""

from __future__ import annotations

import os
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import LabelClass, PredictionSet, TaskKind
from ..datasets import RawDataset, Split, split_stats, zeroshot_convert
from ..ensemble import ensemble_entities, ensemble_relations
from ..errors import (
    ConfigError,
    CorpusMismatch,
    DataMismatchError,
    DescboostError,
    NotFound,
    ServiceError,
    ValidationError,
)
from ..evaluation import correlation_analysis, entity_metrics, relation_metrics
from ..inference import PredictionCache, make_predictor, predict_entities, predict_relations
from ..inference.remote import RemoteModelClient
from ..ranking import rank_descriptions
from ..vargen import (
    EchoGenerator,
    GenerationParams,
    StubGenerator,
    VariationStrategy,
    default_params,
    generate_variations,
)
from . import schemas

MODEL_ID = f"descboost-engine/{__version__}"

_STATUS_BY_ERROR = [
    (NotFound, 404),
    (ConfigError, 400),
    (CorpusMismatch, 409),
    (DataMismatchError, 422),
    (ValidationError, 422),
    (ServiceError, 502),
]


def _status_for(exc: DescboostError) -> int:
    for cls, status in _STATUS_BY_ERROR:
        if isinstance(exc, cls):
            return status
    return 400


def _cache(cache_dir: Optional[str]) -> Optional[PredictionCache]:
    root = cache_dir or os.environ.get("DESCBOOST_CACHE_DIR")
    return PredictionCache(root) if root else None


def _make_generator(payload: schemas.GeneratorPayload):
    extra = payload.model_dump()
    kind = extra.pop("type")
    if kind == "stub":
        return StubGenerator(seed=int(extra.get("seed", 0)))
    if kind == "echo":
        return EchoGenerator()
    endpoint = extra.get("endpoint")
    if not endpoint:
        raise ConfigError("remote generator needs an 'endpoint'")
    return RemoteModelClient(endpoint, token=extra.get("token"))


def _prediction_payload(ps: PredictionSet) -> schemas.PredictionPayload:
    return schemas.PredictionPayload(**ps.to_dict())


def create_app() -> FastAPI:
    app = FastAPI(title="descboost engine", version=__version__)

    @app.exception_handler(DescboostError)
    async def _domain_error(request: Request, exc: DescboostError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", model_id=MODEL_ID)

    @app.post("/convert", response_model=schemas.ConvertResponse)
    def convert(req: schemas.ConvertRequest):
        kind = TaskKind(req.kind)
        splits = {
            Split(split): schemas.CorpusPayload(
                name=req.name, split=split, sentences=rows
            ).to_corpus()
            for split, rows in req.splits.items()
        }
        raw = RawDataset(req.name, kind, splits)
        split_classes = {Split(s): frozenset(ids) for s, ids in req.split_classes.items()}
        converted, report = zeroshot_convert(raw, split_classes, req.seed)
        return schemas.ConvertResponse(
            splits={
                split.value: [
                    schemas.SentenceRow.from_sentence(s) for s in corpus.sentences
                ]
                for split, corpus in converted.splits.items()
            },
            report=report.to_dict(),
        )

    @app.post("/stats")
    def stats(req: schemas.StatsRequest):
        return split_stats(req.corpus.to_corpus(), TaskKind(req.kind)).to_dict()

    @app.post("/variations/generate")
    def variations(req: schemas.VariationsRequest):
        strategy = VariationStrategy(req.strategy)
        params = GenerationParams(**req.params) if req.params else default_params(strategy)
        cls = LabelClass(
            req.label_class.id, req.label_class.name, req.label_class.description, TaskKind(req.kind)
        )
        out = generate_variations(cls, strategy, req.n, _make_generator(req.generator), params)
        return out.to_dict()

    @app.post("/predict/entities", response_model=schemas.PredictResponse)
    def predict_entities_endpoint(req: schemas.PredictRequest):
        spec = req.task.to_spec()
        predictor = make_predictor(req.backend.model_dump())
        predictions = predict_entities(
            predictor, req.corpus.to_corpus(), spec, req.pipeline_id, _cache(req.cache_dir)
        )
        return schemas.PredictResponse(
            predictions=_prediction_payload(predictions),
            decoded_spans=[
                [schemas.AnnotationRow.from_annotation(a) for a in sentence]
                for sentence in predictions.decoded_spans
            ],
        )

    @app.post("/predict/relations", response_model=schemas.PredictResponse)
    def predict_relations_endpoint(req: schemas.PredictRequest):
        spec = req.task.to_spec()
        predictor = make_predictor(req.backend.model_dump())
        predictions = predict_relations(
            predictor, req.corpus.to_corpus(), spec, req.pipeline_id, _cache(req.cache_dir)
        )
        return schemas.PredictResponse(
            predictions=_prediction_payload(predictions),
            decoded_labels=list(predictions.decoded_labels),
        )

    @app.post("/rank", response_model=schemas.RankResponse)
    def rank(req: schemas.RankRequest):
        spec = req.task.to_spec()
        cls = spec.classes[spec.index_of(req.class_id)]
        predictor = make_predictor(req.backend.model_dump())
        reports = rank_descriptions(
            cls,
            req.candidates,
            req.corpus.to_corpus(),
            spec,
            predictor,
            req.normalized,
            _cache(req.cache_dir),
        )
        return schemas.RankResponse(reports=[r.to_dict() for r in reports])

    @app.post("/ensemble/entities", response_model=schemas.EnsembleEntitiesResponse)
    def ensemble_entities_endpoint(req: schemas.EnsembleEntitiesRequest):
        pipelines = [PredictionSet.from_dict(p.model_dump()) for p in req.pipelines]
        spec = req.task.to_spec()
        annotations = ensemble_entities(pipelines, spec, req.config.to_config())
        return schemas.EnsembleEntitiesResponse(
            annotations=[
                [schemas.AnnotationRow.from_annotation(a) for a in sentence]
                for sentence in annotations
            ]
        )

    @app.post("/ensemble/relations", response_model=schemas.EnsembleRelationsResponse)
    def ensemble_relations_endpoint(req: schemas.EnsembleRelationsRequest):
        pipelines = [PredictionSet.from_dict(p.model_dump()) for p in req.pipelines]
        spec = req.task.to_spec()
        return schemas.EnsembleRelationsResponse(
            labels=list(ensemble_relations(pipelines, spec, req.config.to_config()))
        )

    @app.post("/evaluate/entities")
    def evaluate_entities(req: schemas.EvaluateEntitiesRequest):
        pred = [[row.to_annotation() for row in sentence] for sentence in req.predictions]
        return entity_metrics(pred, req.gold.to_corpus(), req.task.to_spec()).to_dict()

    @app.post("/evaluate/relations")
    def evaluate_relations(req: schemas.EvaluateRelationsRequest):
        return relation_metrics(req.labels, req.gold.to_corpus(), req.task.to_spec()).to_dict()

    @app.post("/analyze/correlation")
    def analyze_correlation(req: schemas.CorrelationRequest):
        samples = {cid: [(h, f) for h, f in points] for cid, points in req.samples.items()}
        return correlation_analysis(samples).to_dict()

    return app
