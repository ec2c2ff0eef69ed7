"""Bjontegaard delta-rate between two RD curves."""

import math
from typing import Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from apps.core.exceptions import CurveOverlapError, CurveValidationError

from .domain import RDCurve


def _log_rate_interpolant(curve: RDCurve) -> PchipInterpolator:
    quality = np.asarray(curve.qualities, dtype=np.float64)
    log_rate = np.log(np.asarray(curve.rates, dtype=np.float64))
    # equal-quality knots (from averaged inversions) collapse to their mean log-rate
    knots, inverse = np.unique(quality, return_inverse=True)
    if len(knots) < 2:
        raise CurveValidationError("RD curve spans no quality range")
    merged = np.bincount(inverse, weights=log_rate) / np.bincount(inverse)
    return PchipInterpolator(knots, merged, extrapolate=False)


def quality_overlap(test: RDCurve, reference: RDCurve) -> Tuple[float, float]:
    low = max(min(test.qualities), min(reference.qualities))
    high = min(max(test.qualities), max(reference.qualities))
    if not high > low:
        raise CurveOverlapError(
            f"RD curves share no quality interval (test {min(test.qualities):.3f}..{max(test.qualities):.3f}, "
            f"reference {min(reference.qualities):.3f}..{max(reference.qualities):.3f})"
        )
    return low, high


def bd_rate(test: RDCurve, reference: RDCurve) -> float:
    """Average rate difference of `test` against `reference` at equal quality, in percent.

    log(rate) is interpolated over quality with PCHIP and integrated exactly
    over the shared quality interval. Negative means `test` is cheaper.
    """
    if test.metric != reference.metric:
        raise CurveValidationError(
            f"metric mismatch: {test.metric.value} vs {reference.metric.value}"
        )
    low, high = quality_overlap(test, reference)
    test_area = _log_rate_interpolant(test).integrate(low, high)
    ref_area = _log_rate_interpolant(reference).integrate(low, high)
    mean_diff = (test_area - ref_area) / (high - low)
    return float(100.0 * math.expm1(mean_diff))
