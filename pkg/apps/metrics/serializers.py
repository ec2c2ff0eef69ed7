import json
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd
from django.conf import settings

from apps.core.exceptions import CurveValidationError

from .domain import QualityMetric, RDCurve, build_rd_curve

CSV_COLUMNS = ["rate_kbps", "quality", "metric"]


def curve_to_dict(curve: RDCurve) -> Dict[str, Any]:
    return {
        "schema_version": settings.CLIPFORGE["SCHEMA_VERSION"],
        "metric": curve.metric.value,
        "points": [{"rate_kbps": p.rate, "quality": p.quality} for p in curve.points],
    }


def curve_from_dict(payload: Dict[str, Any], source: str = "<json>") -> RDCurve:
    if not isinstance(payload, dict) or "points" not in payload:
        raise CurveValidationError("RD curve JSON needs a 'points' list", source)
    try:
        metric = QualityMetric.parse(payload.get("metric", QualityMetric.PSNR.value))
    except ValueError as exc:
        raise CurveValidationError(str(exc), source) from exc
    samples = []
    for row, point in enumerate(payload["points"], start=1):
        try:
            samples.append((point["rate_kbps"], point["quality"]))
        except (KeyError, TypeError) as exc:
            raise CurveValidationError("point needs rate_kbps and quality", source, row) from exc
    return build_rd_curve(samples, metric, source=source)


def curve_to_frame(curve: RDCurve) -> pd.DataFrame:
    return pd.DataFrame(curve.to_rows(), columns=CSV_COLUMNS)


def curve_from_frame(frame: pd.DataFrame, source: str = "<csv>") -> RDCurve:
    missing = {"rate_kbps", "quality"} - set(frame.columns)
    if missing:
        raise CurveValidationError(f"missing columns {sorted(missing)}", source)

    metric = QualityMetric.PSNR
    if "metric" in frame.columns:
        tags = frame["metric"].dropna().astype(str).unique()
        if len(tags) > 1:
            raise CurveValidationError(f"mixed metric tags {sorted(tags)}", source)
        if len(tags) == 1:
            try:
                metric = QualityMetric.parse(tags[0])
            except ValueError as exc:
                raise CurveValidationError(str(exc), source) from exc

    samples = []
    # row numbers are 1-based data rows, header excluded
    for row, (rate, quality) in enumerate(zip(frame["rate_kbps"], frame["quality"]), start=1):
        try:
            samples.append((float(rate), float(quality)))
        except (TypeError, ValueError) as exc:
            raise CurveValidationError(f"non-numeric value {rate!r}/{quality!r}", source, row) from exc
    return build_rd_curve(samples, metric, source=source)


def load_rd_curve(path: Union[str, Path]) -> RDCurve:
    """Read an RD curve from a .csv or .json file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CurveValidationError(f"invalid JSON: {exc}", path.name) from exc
        return curve_from_dict(payload, source=path.name)
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise CurveValidationError(f"unreadable CSV: {exc}", path.name) from exc
    return curve_from_frame(frame, source=path.name)
