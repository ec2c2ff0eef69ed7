"""Scoring time models and splitting corpora into train and holdout."""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import r2_score
from sklearn.model_selection import GroupShuffleSplit, train_test_split

from apps.core.exceptions import InsufficientDataError, JobConfigError

from .complexity import TimeSample
from .time_model import TargetTransform, TimeModel, check_schema, feature_matrix

logger = logging.getLogger("clipforge.load_predict")

MAE_MIN_TARGET = 1e-6


class ScoreSpace(str, Enum):
    LINEAR = "linear"
    LOG = "log"
    LOG_TO_LINEAR = "log_to_linear"


class SplitMode(str, Enum):
    OVERFIT = "overfit"
    GENERALISED = "generalised"


@dataclass(frozen=True)
class EvalReport:
    r2: Optional[float]
    mae_pct: Optional[float]
    smae_pct: float
    space: ScoreSpace
    n_samples: int

    def to_dict(self):
        payload = asdict(self)
        payload["space"] = self.space.value
        return payload


def score(y_true: np.ndarray, y_pred: np.ndarray, space: ScoreSpace) -> EvalReport:
    """R^2, MAE% = 100 mean(|e|/|y|) and sMAE% = 100 mean(|e| / ((|y| + |y_hat|) / 2)).

    R^2 is None when the holdout has zero variance. Targets with |y| below
    MAE_MIN_TARGET (a 1 s encode in log space) are left out of MAE%; MAE% is
    None when no target is left.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0:
        raise InsufficientDataError("cannot score an empty holdout")
    error = np.abs(y_pred - y_true)
    r2 = float(r2_score(y_true, y_pred)) if np.ptp(y_true) > 0 else None
    usable = np.abs(y_true) >= MAE_MIN_TARGET
    if not usable.all():
        logger.warning(f"{int((~usable).sum())} of {y_true.size} targets too close to 0 for MAE%; left out")
    mae_pct = 100.0 * float(np.mean(error[usable] / np.abs(y_true[usable]))) if usable.any() else None
    scale = (np.abs(y_true) + np.abs(y_pred)) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(scale > 0, error / scale, 0.0)
    smae_pct = 100.0 * float(np.mean(ratio))
    return EvalReport(r2=r2, mae_pct=mae_pct, smae_pct=smae_pct, space=ScoreSpace(space), n_samples=int(y_true.size))


def evaluate(model: TimeModel, holdout: Sequence[TimeSample], space: Optional[ScoreSpace] = None) -> EvalReport:
    """Score in the model's own space by default.

    log_to_linear predicts with a log model, exponentiates, and scores seconds.
    """
    check_schema(model)
    space = ScoreSpace(space or model.transform.value)
    if not holdout:
        raise InsufficientDataError("cannot evaluate on an empty holdout")
    X = feature_matrix(holdout)
    seconds = np.array([s.measured_seconds for s in holdout], dtype=np.float64)

    if space is ScoreSpace.LOG:
        if model.transform is not TargetTransform.LOG:
            raise JobConfigError("log-space scores need a log-transform model")
        return score(np.log(seconds), model.raw_predict(X), space)
    if space is ScoreSpace.LOG_TO_LINEAR and model.transform is not TargetTransform.LOG:
        raise JobConfigError("log_to_linear scores need a log-transform model")
    return score(seconds, model.predict_seconds(X), space)


def evaluate_bundle(linear_model: TimeModel, log_model: TimeModel, holdout: Sequence[TimeSample]) -> Dict[str, EvalReport]:
    return {
        ScoreSpace.LINEAR.value: evaluate(linear_model, holdout, ScoreSpace.LINEAR),
        ScoreSpace.LOG.value: evaluate(log_model, holdout, ScoreSpace.LOG),
        ScoreSpace.LOG_TO_LINEAR.value: evaluate(log_model, holdout, ScoreSpace.LOG_TO_LINEAR),
    }


def split_dataset(
    samples: Sequence[TimeSample],
    mode=SplitMode.GENERALISED,
    ratio: float = 0.8,
    seed: int = 0,
) -> Tuple[List[TimeSample], List[TimeSample]]:
    """(train, test). `ratio` is the train fraction.

    generalised keeps every source_id on one side of the split; overfit
    splits sample by sample.
    """
    mode = SplitMode(mode)
    if not 0 < ratio < 1:
        raise JobConfigError(f"split ratio must be in (0, 1), got {ratio}")
    samples = list(samples)
    indices = np.arange(len(samples))

    if mode is SplitMode.OVERFIT:
        if len(samples) < 2:
            raise InsufficientDataError("need at least 2 samples to split")
        train_idx, test_idx = train_test_split(indices, train_size=ratio, random_state=seed, shuffle=True)
    else:
        groups = [s.source_id for s in samples]
        if len(set(groups)) < 2:
            raise InsufficientDataError("generalised split needs at least 2 distinct source ids")
        splitter = GroupShuffleSplit(n_splits=1, train_size=ratio, random_state=seed)
        train_idx, test_idx = next(splitter.split(indices, groups=groups))

    return [samples[i] for i in sorted(train_idx)], [samples[i] for i in sorted(test_idx)]
