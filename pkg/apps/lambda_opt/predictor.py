"""Random-forest regression from first-pass features to the tuned k."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.dummy import DummyRegressor
from sklearn.ensemble import RandomForestRegressor

from apps.core.artifacts import decode_estimator, encode_estimator, read_json, write_json
from apps.core.exceptions import InsufficientDataError, SchemaMismatchError
from utils.monitoring import monitor_performance

from .features import KFeatureVector

logger = logging.getLogger("clipforge.lambda_opt")

MIN_TRAINING_SAMPLES = 20
MODEL_KIND = "k_predictor"

DEFAULT_FOREST_PARAMS = {
    "n_estimators": 100,
    "max_depth": 12,
    "max_features": "sqrt",
    "bootstrap": True,
    "criterion": "squared_error",
}


@dataclass
class KPredictor:
    estimator: Any
    feature_names: Tuple[str, ...]
    schema_hash: str
    params: Dict[str, Any]
    constant: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": MODEL_KIND,
            "feature_names": list(self.feature_names),
            "feature_schema_hash": self.schema_hash,
            "params": self.params,
            "constant": self.constant,
            "estimator": encode_estimator(self.estimator),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "KPredictor":
        return cls(
            estimator=decode_estimator(payload["estimator"]),
            feature_names=tuple(payload["feature_names"]),
            schema_hash=payload["feature_schema_hash"],
            params=payload.get("params", {}),
            constant=payload.get("constant", False),
        )

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "KPredictor":
        return cls.from_dict(read_json(path, expected_kind=MODEL_KIND))


@monitor_performance("train_k_predictor", min_log_time=0.0)
def train_k_predictor(
    dataset: Sequence[Tuple[KFeatureVector, float]],
    forest_params: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> KPredictor:
    if len(dataset) < MIN_TRAINING_SAMPLES:
        raise InsufficientDataError(
            f"k predictor needs at least {MIN_TRAINING_SAMPLES} samples, got {len(dataset)}"
        )
    X = np.vstack([features.as_array() for features, _ in dataset])
    y = np.array([k for _, k in dataset], dtype=np.float64)
    params = {**DEFAULT_FOREST_PARAMS, **(forest_params or {})}

    if np.all(y == y[0]):
        logger.warning(f"every training target equals {y[0]}; fitting a constant predictor")
        estimator = DummyRegressor(strategy="constant", constant=y[0]).fit(X, y)
        constant = True
    else:
        estimator = RandomForestRegressor(random_state=seed, n_jobs=1, **params).fit(X, y)
        constant = False

    return KPredictor(
        estimator=estimator,
        feature_names=KFeatureVector.names(),
        schema_hash=KFeatureVector.schema_hash(),
        params={**params, "seed": seed},
        constant=constant,
    )


def predict_k(model: KPredictor, features: KFeatureVector, k_bounds: Tuple[float, float] = (1.0 / 16.0, 16.0)) -> float:
    if model.schema_hash != KFeatureVector.schema_hash() or tuple(model.feature_names) != KFeatureVector.names():
        raise SchemaMismatchError(
            f"model expects feature schema {model.schema_hash}, features are {KFeatureVector.schema_hash()}"
        )
    raw = float(model.estimator.predict(features.as_array().reshape(1, -1))[0])
    return min(max(raw, k_bounds[0]), k_bounds[1])
