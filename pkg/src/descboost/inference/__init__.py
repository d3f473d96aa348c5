from .backends import (
    Predictor,
    make_predictor,
    predict_entities,
    predict_relations,
    predictor_calls,
)
from .cache import PredictionCache
from .hashing import stable_hash64, unit_interval
from .remote import RemoteModelClient
from .simulators import (
    LexicalSimParams,
    LexicalSimPredictor,
    NoisyOracleParams,
    NoisyOraclePredictor,
)

__all__ = [
    "Predictor",
    "make_predictor",
    "predict_entities",
    "predict_relations",
    "predictor_calls",
    "PredictionCache",
    "stable_hash64",
    "unit_interval",
    "RemoteModelClient",
    "LexicalSimParams",
    "LexicalSimPredictor",
    "NoisyOracleParams",
    "NoisyOraclePredictor",
]
