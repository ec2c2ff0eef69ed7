"""Gradient-boosted regression of encode duration from complexity features."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
from sklearn.ensemble import GradientBoostingRegressor

from apps.core.artifacts import decode_estimator, encode_estimator, read_json, write_json
from apps.core.exceptions import InsufficientDataError, SampleValidationError, SchemaMismatchError
from utils.monitoring import monitor_performance

from .complexity import ComplexityFeatures, TimeSample

logger = logging.getLogger("clipforge.load_predict")

MIN_TRAINING_SAMPLES = 50
MIN_PREDICTED_SECONDS = 1e-6
MODEL_KIND = "time_model"

DEFAULT_BOOSTING_PARAMS = {
    "n_estimators": 200,
    "max_depth": 6,
    "learning_rate": 0.1,
    "subsample": 0.8,
}


class TargetTransform(str, Enum):
    LINEAR = "linear"
    LOG = "log"


def feature_matrix(samples: Sequence[TimeSample]) -> np.ndarray:
    return np.vstack([s.features.as_array() for s in samples])


@dataclass
class TimeModel:
    estimator: Any
    transform: TargetTransform
    schema_hash: str
    params: Dict[str, Any]

    def raw_predict(self, X: np.ndarray) -> np.ndarray:
        """Ensemble output in the training space (ln seconds for log models)."""
        return self.estimator.predict(X)

    def predict_seconds(self, X: np.ndarray) -> np.ndarray:
        raw = self.raw_predict(X)
        seconds = np.exp(raw) if self.transform is TargetTransform.LOG else raw
        return np.maximum(seconds, MIN_PREDICTED_SECONDS)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": MODEL_KIND,
            "transform": self.transform.value,
            "feature_names": list(ComplexityFeatures.names()),
            "feature_schema_hash": self.schema_hash,
            "params": self.params,
            "estimator": encode_estimator(self.estimator),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TimeModel":
        return cls(
            estimator=decode_estimator(payload["estimator"]),
            transform=TargetTransform(payload["transform"]),
            schema_hash=payload["feature_schema_hash"],
            params=payload.get("params", {}),
        )

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "TimeModel":
        return cls.from_dict(read_json(path, expected_kind=MODEL_KIND))


@monitor_performance("train_time_model", min_log_time=0.0)
def train_time_model(
    samples: Sequence[TimeSample],
    transform=TargetTransform.LOG,
    params: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> TimeModel:
    transform = TargetTransform(transform)
    if len(samples) < MIN_TRAINING_SAMPLES:
        raise InsufficientDataError(f"time model needs at least {MIN_TRAINING_SAMPLES} samples, got {len(samples)}")
    y = np.array([s.measured_seconds for s in samples], dtype=np.float64)
    if transform is TargetTransform.LOG:
        bad = np.flatnonzero(~(y > 0))
        if bad.size:
            raise SampleValidationError("log transform needs positive durations", row=int(bad[0]) + 1)
        y = np.log(y)

    params = {**DEFAULT_BOOSTING_PARAMS, **(params or {})}
    estimator = GradientBoostingRegressor(random_state=seed, **params).fit(feature_matrix(samples), y)
    return TimeModel(
        estimator=estimator,
        transform=transform,
        schema_hash=ComplexityFeatures.schema_hash(),
        params={**params, "seed": seed},
    )


def check_schema(model: TimeModel):
    if model.schema_hash != ComplexityFeatures.schema_hash():
        raise SchemaMismatchError(
            f"model expects feature schema {model.schema_hash}, features are {ComplexityFeatures.schema_hash()}"
        )


def predict_time(model: TimeModel, features: ComplexityFeatures) -> float:
    check_schema(model)
    seconds = float(model.predict_seconds(features.as_array().reshape(1, -1))[0])
    if not math.isfinite(seconds):
        raise SampleValidationError(f"prediction is not finite: {seconds}")
    return seconds
