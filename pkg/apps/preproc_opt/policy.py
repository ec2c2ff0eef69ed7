"""Degree-5 bivariate polynomial mapping (noise sigma, bitrate) to a denoiser strength."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from apps.core.artifacts import read_json, write_csv, write_json
from apps.core.exceptions import CurveValidationError, RankDeficientError

logger = logging.getLogger("clipforge.preproc_opt")

DEGREE = 5
# (power of sigma, power of ln rate), grouped by total degree
TERMS: Tuple[Tuple[int, int], ...] = tuple(
    (total - j, j) for total in range(DEGREE + 1) for j in range(total + 1)
)
POLICY_KIND = "strength_policy"
TABLE_COLUMNS = ["sigma", "bitrate", "strength"]


def _normalize(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return 2.0 * (values - lo) / (hi - lo) - 1.0


def design_matrix(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
    return np.column_stack([u**i * v**j for i, j in TERMS])


@dataclass(frozen=True)
class StrengthPolicy:
    coefficients: Tuple[float, ...]
    sigma_range: Tuple[float, float]
    log_rate_range: Tuple[float, float]
    s_max: float
    residual_rmse: float = 0.0

    def __post_init__(self):
        if len(self.coefficients) != len(TERMS):
            raise ValueError(f"policy needs {len(TERMS)} coefficients, got {len(self.coefficients)}")
        for name in ("sigma_range", "log_rate_range"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise ValueError(f"{name} must have positive width, got {(lo, hi)}")
        if self.s_max < 0:
            raise ValueError("s_max must be >= 0")

    def raw_value(self, sigma: float, rate: float) -> float:
        """Polynomial value with inputs held to the fitted range and no output clamp."""
        sigma = min(max(sigma, self.sigma_range[0]), self.sigma_range[1])
        log_rate = min(max(math.log(rate), self.log_rate_range[0]), self.log_rate_range[1])
        u = _normalize(np.array([sigma]), *self.sigma_range)
        v = _normalize(np.array([log_rate]), *self.log_rate_range)
        return float(design_matrix(u, v)[0] @ np.asarray(self.coefficients))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": POLICY_KIND,
            "degree": DEGREE,
            "terms": [list(t) for t in TERMS],
            "coefficients": list(self.coefficients),
            "sigma_range": list(self.sigma_range),
            "log_rate_range": list(self.log_rate_range),
            "s_max": self.s_max,
            "residual_rmse": self.residual_rmse,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "StrengthPolicy":
        return cls(
            coefficients=tuple(float(c) for c in payload["coefficients"]),
            sigma_range=tuple(payload["sigma_range"]),
            log_rate_range=tuple(payload["log_rate_range"]),
            s_max=float(payload["s_max"]),
            residual_rmse=float(payload.get("residual_rmse", 0.0)),
        )

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "StrengthPolicy":
        return cls.from_dict(read_json(path, expected_kind=POLICY_KIND))


def fit_policy(table: Sequence[Tuple[float, float, float]], s_max: float) -> StrengthPolicy:
    """Least-squares fit over (sigma, ln rate), both scaled to [-1, 1]."""
    if len(table) < len(TERMS):
        raise RankDeficientError(f"degree-{DEGREE} fit needs at least {len(TERMS)} entries, got {len(table)}")
    data = np.asarray(table, dtype=np.float64)
    sigma, log_rate, strength = data[:, 0], np.log(data[:, 1]), data[:, 2]
    sigma_range = (float(sigma.min()), float(sigma.max()))
    log_rate_range = (float(log_rate.min()), float(log_rate.max()))
    if sigma_range[1] <= sigma_range[0] or log_rate_range[1] <= log_rate_range[0]:
        raise RankDeficientError("table must span more than one sigma and one bitrate")

    A = design_matrix(_normalize(sigma, *sigma_range), _normalize(log_rate, *log_rate_range))
    coefficients, _, rank, _ = np.linalg.lstsq(A, strength, rcond=None)
    if rank < len(TERMS):
        raise RankDeficientError(f"design matrix rank {rank} < {len(TERMS)}; axes too sparse")
    residual = float(np.sqrt(np.mean(np.square(A @ coefficients - strength))))
    logger.info(f"fitted strength policy on {len(table)} entries, residual RMSE {residual:.3g}")
    return StrengthPolicy(
        coefficients=tuple(float(c) for c in coefficients),
        sigma_range=sigma_range,
        log_rate_range=log_rate_range,
        s_max=float(s_max),
        residual_rmse=residual,
    )


def optimal_strength(policy: StrengthPolicy, sigma: float, rate: float) -> float:
    return min(max(policy.raw_value(sigma, rate), 0.0), policy.s_max)


def write_table(path, table: Sequence[Tuple[float, float, float]]) -> Path:
    return write_csv(path, [dict(zip(TABLE_COLUMNS, row)) for row in table], columns=TABLE_COLUMNS)


def read_table(path) -> Sequence[Tuple[float, float, float]]:
    frame = pd.read_csv(path)
    missing = [c for c in TABLE_COLUMNS if c not in frame.columns]
    if missing:
        raise CurveValidationError(f"strength table lacks columns {missing}", source=str(path))
    return [tuple(float(x) for x in row) for row in frame[TABLE_COLUMNS].itertuples(index=False)]
