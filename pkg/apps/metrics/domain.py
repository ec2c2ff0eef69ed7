import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from apps.core.exceptions import CurveValidationError

logger = logging.getLogger("clipforge.metrics")

MIN_CURVE_POINTS = 4
# Largest quality drop between rate-adjacent points that is averaged away
MAX_INVERSION = 0.05


class QualityMetric(str, enum.Enum):
    PSNR = "PSNR"
    MS_SSIM = "MS-SSIM"

    @classmethod
    def parse(cls, value) -> "QualityMetric":
        if isinstance(value, cls):
            return value
        normalized = str(value).strip().upper().replace("_", "-")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"unknown quality metric {value!r}; expected PSNR or MS-SSIM")


@dataclass(frozen=True)
class RDPoint:
    rate: float  # kbit/s
    quality: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise CurveValidationError(f"rate must be positive and finite, got {self.rate}")
        if not math.isfinite(self.quality):
            raise CurveValidationError(f"quality must be finite, got {self.quality}")


@dataclass(frozen=True)
class RDCurve:
    points: Tuple[RDPoint, ...]
    metric: QualityMetric = QualityMetric.PSNR

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < MIN_CURVE_POINTS:
            raise CurveValidationError(
                f"an RD curve needs at least {MIN_CURVE_POINTS} points, got {len(self.points)}"
            )
        for prev, cur in zip(self.points, self.points[1:]):
            if not cur.rate > prev.rate:
                raise CurveValidationError("RD curve rates must be strictly increasing")
            if cur.quality < prev.quality:
                raise CurveValidationError("RD curve quality must not decrease with rate")

    @property
    def rates(self) -> Tuple[float, ...]:
        return tuple(p.rate for p in self.points)

    @property
    def qualities(self) -> Tuple[float, ...]:
        return tuple(p.quality for p in self.points)

    def scaled(self, factor: float) -> "RDCurve":
        return RDCurve(tuple(RDPoint(p.rate * factor, p.quality) for p in self.points), self.metric)

    def to_rows(self):
        return [
            {"rate_kbps": p.rate, "quality": p.quality, "metric": self.metric.value}
            for p in self.points
        ]


def build_rd_curve(
    samples: Iterable[Sequence[float]],
    metric=QualityMetric.PSNR,
    source: Optional[str] = None,
) -> RDCurve:
    """Sort, validate and monotonize raw (rate, quality) samples.

    Rate-adjacent pairs whose quality drops by at most MAX_INVERSION are
    replaced by their mean; larger drops are rejected.
    """
    metric = QualityMetric.parse(metric)
    rows = []
    for index, sample in enumerate(samples, start=1):
        try:
            rate, quality = float(sample[0]), float(sample[1])
        except (TypeError, ValueError, IndexError) as exc:
            raise CurveValidationError(f"malformed sample {sample!r}", source, index) from exc
        if not (math.isfinite(rate) and rate > 0):
            raise CurveValidationError(f"rate must be positive and finite, got {rate}", source, index)
        if not math.isfinite(quality):
            raise CurveValidationError(f"quality must be finite, got {quality}", source, index)
        rows.append((rate, quality, index))

    if len(rows) < MIN_CURVE_POINTS:
        raise CurveValidationError(
            f"an RD curve needs at least {MIN_CURVE_POINTS} samples, got {len(rows)}", source
        )

    rows.sort(key=lambda row: row[0])
    for prev, cur in zip(rows, rows[1:]):
        if cur[0] == prev[0]:
            raise CurveValidationError(f"duplicate rate {cur[0]}", source, cur[2])

    qualities = [row[1] for row in rows]
    for i in range(1, len(qualities)):
        drop = qualities[i - 1] - qualities[i]
        if drop <= 0:
            continue
        if drop > MAX_INVERSION + 1e-12:
            raise CurveValidationError(
                f"quality drops by {drop:.4f} between rates {rows[i - 1][0]} and {rows[i][0]}",
                source,
                rows[i][2],
            )
        mean = (qualities[i - 1] + qualities[i]) / 2.0
        logger.debug(f"averaging quality inversion of {drop:.4f} at rate {rows[i][0]}")
        qualities[i - 1] = qualities[i] = mean
        if i >= 2 and qualities[i - 2] > mean:
            raise CurveValidationError("quality inversion cannot be repaired", source, rows[i][2])

    return RDCurve(
        tuple(RDPoint(rate, quality) for (rate, _, _), quality in zip(rows, qualities)),
        metric,
    )
