"""Duration classes and the classifier that predicts them."""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix, recall_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer, StandardScaler
from sklearn.svm import LinearSVC

from apps.core.artifacts import decode_estimator, encode_estimator, read_json, write_json
from apps.core.exceptions import InsufficientDataError, JobConfigError, SchemaMismatchError
from utils.monitoring import monitor_performance

from .complexity import ComplexityFeatures, TimeSample
from .time_model import feature_matrix

logger = logging.getLogger("clipforge.load_predict")

MODEL_KIND = "duration_classifier"
DEFAULT_SVC_PARAMS = {"C": 1.0, "max_iter": 20000}


class BinMode(str, Enum):
    LINEAR = "linear"
    GEOMETRIC = "geometric"


@dataclass(frozen=True)
class BinScheme:
    """Interior class boundaries; class i covers [edges[i-1], edges[i])."""

    edges: Tuple[float, ...]
    mode: BinMode
    t_min: float
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        object.__setattr__(self, "mode", BinMode(self.mode))
        if any(e <= 0 for e in self.edges) or any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise JobConfigError(f"bin edges must be positive and strictly ascending, got {self.edges}")

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1

    def widths(self) -> np.ndarray:
        return np.diff(np.concatenate([[self.t_min], self.edges, [self.t_max]]))

    def bin_index(self, seconds) -> np.ndarray:
        return np.searchsorted(self.edges, np.asarray(seconds, dtype=np.float64), side="right")

    def to_dict(self) -> Dict[str, Any]:
        return {"edges": list(self.edges), "mode": self.mode.value, "t_min": self.t_min, "t_max": self.t_max}

    @classmethod
    def from_dict(cls, payload) -> "BinScheme":
        return cls(tuple(payload["edges"]), payload["mode"], payload["t_min"], payload["t_max"])


def make_bins(mode, n: int, t_min: float, t_max: float) -> BinScheme:
    mode = BinMode(mode)
    if n < 2:
        raise JobConfigError(f"need at least 2 bins, got {n}")
    if not (0 <= t_min < t_max) or (mode is BinMode.GEOMETRIC and t_min <= 0):
        raise JobConfigError(f"invalid duration range [{t_min}, {t_max}] for {mode.value} bins")
    i = np.arange(1, n)
    if mode is BinMode.LINEAR:
        edges = t_min + (t_max - t_min) * i / n
    else:
        edges = t_min * (t_max / t_min) ** (i / n)
    return BinScheme(tuple(edges.tolist()), mode, float(t_min), float(t_max))


def merge_empty_bins(scheme: BinScheme, seconds: Sequence[float]) -> BinScheme:
    """Drop boundaries so every class holds at least one duration."""
    edges = list(scheme.edges)
    while edges:
        counts = np.bincount(np.searchsorted(edges, seconds, side="right"), minlength=len(edges) + 1)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            break
        k = int(empty[0])
        # an empty class merges into its upper neighbour; the last one into its lower
        removed = edges.pop(k if k < len(edges) else k - 1)
        logger.warning(f"duration class {k} is empty; merged across boundary {removed:g}s")
    return BinScheme(tuple(edges), scheme.mode, scheme.t_min, scheme.t_max)


@dataclass
class DurationClassifier:
    pipeline: Any
    bins: BinScheme
    schema_hash: str
    per_class_recall: Tuple[float, ...]
    macro_recall: float
    params: Dict[str, Any]

    def predict_bins(self, features: Sequence[ComplexityFeatures]) -> np.ndarray:
        if self.schema_hash != ComplexityFeatures.schema_hash():
            raise SchemaMismatchError(f"classifier expects feature schema {self.schema_hash}")
        return self.pipeline.predict(np.vstack([f.as_array() for f in features]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": MODEL_KIND,
            "bins": self.bins.to_dict(),
            "feature_schema_hash": self.schema_hash,
            "per_class_recall": list(self.per_class_recall),
            "macro_recall": self.macro_recall,
            "params": self.params,
            "estimator": encode_estimator(self.pipeline),
        }

    @classmethod
    def from_dict(cls, payload) -> "DurationClassifier":
        return cls(
            pipeline=decode_estimator(payload["estimator"]),
            bins=BinScheme.from_dict(payload["bins"]),
            schema_hash=payload["feature_schema_hash"],
            per_class_recall=tuple(payload["per_class_recall"]),
            macro_recall=payload["macro_recall"],
            params=payload.get("params", {}),
        )

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "DurationClassifier":
        return cls.from_dict(read_json(path, expected_kind=MODEL_KIND))


def _recalls(labels: np.ndarray, predicted: np.ndarray, n_bins: int) -> Tuple[Tuple[float, ...], float]:
    present = np.unique(labels)
    per_class = recall_score(labels, predicted, labels=list(range(n_bins)), average=None, zero_division=0)
    return tuple(float(r) for r in per_class), float(np.mean(per_class[present]))


@monitor_performance("train_duration_classifier", min_log_time=0.0)
def train_duration_classifier(
    samples: Sequence[TimeSample],
    bins: BinScheme,
    params: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> DurationClassifier:
    """Linear margin classifier (one-vs-rest) on log1p-compressed, standardized features."""
    seconds = np.array([s.measured_seconds for s in samples], dtype=np.float64)
    bins = merge_empty_bins(bins, seconds)
    labels = bins.bin_index(seconds)
    if np.unique(labels).size < 2:
        raise InsufficientDataError("every duration falls into one class")

    params = {**DEFAULT_SVC_PARAMS, **(params or {})}
    pipeline = make_pipeline(
        FunctionTransformer(np.log1p),
        StandardScaler(),
        LinearSVC(random_state=seed, **params),
    )
    X = feature_matrix(samples)
    pipeline.fit(X, labels)
    per_class, macro = _recalls(labels, pipeline.predict(X), bins.n_bins)
    logger.info(f"duration classifier over {bins.n_bins} {bins.mode.value} classes, training macro recall {macro:.3f}")
    return DurationClassifier(
        pipeline=pipeline,
        bins=bins,
        schema_hash=ComplexityFeatures.schema_hash(),
        per_class_recall=per_class,
        macro_recall=macro,
        params={**params, "seed": seed},
    )


def evaluate_duration_classifier(classifier: DurationClassifier, holdout: Sequence[TimeSample]) -> Dict[str, Any]:
    if not holdout:
        raise InsufficientDataError("cannot evaluate on an empty holdout")
    labels = classifier.bins.bin_index([s.measured_seconds for s in holdout])
    predicted = classifier.predict_bins([s.features for s in holdout])
    per_class, macro = _recalls(labels, predicted, classifier.bins.n_bins)
    matrix = confusion_matrix(labels, predicted, labels=list(range(classifier.bins.n_bins)))
    return {
        "per_class_recall": list(per_class),
        "macro_recall": macro,
        "confusion_matrix": matrix.tolist(),
        "n_samples": len(holdout),
    }
