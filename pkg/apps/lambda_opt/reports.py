"""Batch summaries of k-search outcomes."""

import math
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from apps.core.artifacts import write_csv, write_json

from .domain import LambdaSearchOutcome

SUMMARY_COLUMNS = [
    "encoder",
    "tuning",
    "clips",
    "mean_k",
    "avg_iterations",
    "avg_optimizer_iterations",
    "avg_bd_rate",
    "best_bd_rate",
    "clips_gain_over_1pct",
    "clips_gain_over_5pct",
]


def summarize_outcomes(outcomes: Sequence[LambdaSearchOutcome], encoder: str, tuning: str) -> Dict[str, object]:
    """One summary row: mean k per group, iteration averages, BD-rate stats.

    Gains are negative percentages, so the best clip is the minimum.
    """
    if not outcomes:
        return {**{column: None for column in SUMMARY_COLUMNS}, "encoder": encoder, "tuning": tuning, "clips": 0}
    k_matrix = np.array([o.k_opt for o in outcomes], dtype=np.float64)
    gains = np.array([o.bd_rate_gain for o in outcomes], dtype=np.float64)
    return {
        "encoder": encoder,
        "tuning": tuning,
        "clips": len(outcomes),
        "mean_k": ";".join(f"{k:.4g}" for k in k_matrix.mean(axis=0)),
        "avg_iterations": float(np.mean([o.iterations for o in outcomes])),
        "avg_optimizer_iterations": float(np.mean([o.optimizer_iterations for o in outcomes])),
        "avg_bd_rate": float(gains.mean()),
        "best_bd_rate": float(gains.min()),
        "clips_gain_over_1pct": int(np.sum(gains < -1.0)),
        "clips_gain_over_5pct": int(np.sum(gains < -5.0)),
    }


def outcome_rows(outcomes: Sequence[LambdaSearchOutcome]) -> List[Dict[str, object]]:
    rows = []
    for outcome in sorted(outcomes, key=lambda o: o.source_id):
        rows.append(
            {
                "source_id": outcome.source_id,
                "k_opt": ";".join(f"{k:.6g}" for k in outcome.k_opt),
                "bd_rate_gain": outcome.bd_rate_gain if math.isfinite(outcome.bd_rate_gain) else None,
                "iterations": outcome.iterations,
                "optimizer_iterations": outcome.optimizer_iterations,
                "total_encodes": outcome.total_encodes,
                "wall_time": outcome.wall_time,
                "terminated_early": outcome.terminated_early or "",
                "proxy": outcome.proxy.value,
                "proxy_encode_time": outcome.proxy_encode_time,
                "full_encode_time": outcome.full_encode_time,
            }
        )
    return rows


def write_outcome(path: Path, outcome: LambdaSearchOutcome, seed=None) -> Path:
    return write_json(path, {"kind": "lambda_outcome", "seed": seed, **outcome.to_dict()})


def write_summary(path: Path, outcomes: Sequence[LambdaSearchOutcome], encoder: str, tuning: str) -> Path:
    return write_csv(path, [summarize_outcomes(outcomes, encoder, tuning)], columns=SUMMARY_COLUMNS)
