"""Content complexity features for encode-time prediction.

Spatial energy (SE) of a 32x32 luma block is the mean absolute orthonormal
DCT coefficient with DC left out. Temporal energy (TE) of a frame is the
mean absolute change of block SE from the previous frame.
"""

import hashlib
import logging
import math
from dataclasses import astuple, dataclass, fields
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft

from apps.core.exceptions import FrameGeometryError, SampleValidationError
from apps.video_io.domain import Clip
from apps.video_io.noise import mean_brightness

logger = logging.getLogger("clipforge.load_predict")

BLOCK = 32


@dataclass(frozen=True)
class ComplexityFeatures:
    height: float
    total_pixels: float
    frame_rate: float
    n_frames: float
    se_mean: float
    se_max: float
    se_median: float
    se_std: float
    te_mean: float
    te_max: float
    te_median: float
    te_std: float
    mean_brightness: float
    preset: float
    target_crf: float
    short_clip: bool = False

    def __post_init__(self):
        if self.n_frames < 1 or self.total_pixels < 1:
            raise SampleValidationError("frame and pixel counts must be positive")
        if min(self.se_mean, self.se_max, self.te_mean, self.te_max) < 0:
            raise SampleValidationError("energies must be non-negative")

    @classmethod
    def names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls) if f.name != "short_clip")

    @classmethod
    def schema_hash(cls) -> str:
        return hashlib.sha256(",".join(cls.names()).encode()).hexdigest()[:16]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self)[: len(self.names())], dtype=np.float64)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names(), self.as_array().tolist()))


@dataclass(frozen=True)
class TimeSample:
    features: ComplexityFeatures
    measured_seconds: float
    source_id: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.measured_seconds) and self.measured_seconds > 0):
            raise SampleValidationError(f"measured_seconds must be finite and positive, got {self.measured_seconds}")


def block_energies(luma: np.ndarray) -> np.ndarray:
    """SE of every whole 32x32 block of one luma plane, shape (rows, cols)."""
    h, w = luma.shape
    bh, bw = h // BLOCK, w // BLOCK
    blocks = luma[: bh * BLOCK, : bw * BLOCK].astype(np.float64)
    blocks = blocks.reshape(bh, BLOCK, bw, BLOCK).transpose(0, 2, 1, 3)
    magnitude = np.abs(fft.dctn(blocks, axes=(2, 3), norm="ortho"))
    return (magnitude.sum(axis=(2, 3)) - magnitude[:, :, 0, 0]) / (BLOCK * BLOCK - 1)


def _stats(values: Sequence[float]) -> Tuple[float, float, float, float]:
    if len(values) == 0:
        return 0.0, 0.0, 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.max()), float(np.median(arr)), float(arr.std())


def extract_complexity(clip: Clip, preset: int, crf: int) -> ComplexityFeatures:
    if clip.width < BLOCK or clip.height < BLOCK:
        raise FrameGeometryError(f"complexity needs luma of at least {BLOCK}x{BLOCK}, got {clip.width}x{clip.height}")

    energies = [block_energies(frame.y) for frame in clip.frames]
    se = [float(e.mean()) for e in energies]
    te: List[float] = [float(np.abs(cur - prev).mean()) for prev, cur in zip(energies, energies[1:])]
    short = clip.n_frames < 2
    if short:
        logger.warning(f"{clip.source_id or 'clip'} has a single frame; temporal energy set to 0")

    se_stats, te_stats = _stats(se), _stats(te)
    return ComplexityFeatures(
        height=float(clip.height),
        total_pixels=float(clip.width * clip.height),
        frame_rate=float(clip.frame_rate),
        n_frames=float(clip.n_frames),
        se_mean=se_stats[0],
        se_max=se_stats[1],
        se_median=se_stats[2],
        se_std=se_stats[3],
        te_mean=te_stats[0],
        te_max=te_stats[1],
        te_median=te_stats[2],
        te_std=te_stats[3],
        mean_brightness=mean_brightness(clip),
        preset=float(preset),
        target_crf=float(crf),
        short_clip=short,
    )


def preset_index(preset: str, ladder: Sequence[str]) -> int:
    try:
        return list(ladder).index(preset)
    except ValueError:
        raise SampleValidationError(f"preset {preset!r} is not in ladder {list(ladder)}") from None


SAMPLE_COLUMNS = list(ComplexityFeatures.names()) + ["seconds", "source_id"]


def samples_to_frame(samples: Sequence[TimeSample]) -> pd.DataFrame:
    rows = [{**s.features.as_dict(), "seconds": s.measured_seconds, "source_id": s.source_id} for s in samples]
    return pd.DataFrame(rows, columns=SAMPLE_COLUMNS)


def _parse_rows(frame: pd.DataFrame, required: Sequence[str], source, build):
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SampleValidationError(f"table lacks columns {missing}", source=source)
    parsed = []
    for row_number, row in enumerate(frame.to_dict("records"), start=1):
        try:
            features = ComplexityFeatures(**{name: float(row[name]) for name in ComplexityFeatures.names()})
            parsed.append(build(features, row))
        except (SampleValidationError, ValueError, TypeError) as exc:
            raise SampleValidationError(str(exc), source=source, row=row_number) from exc
    return parsed


def features_from_frame(frame: pd.DataFrame, source: str = None) -> List[ComplexityFeatures]:
    return _parse_rows(frame, ComplexityFeatures.names(), source, lambda features, row: features)


def samples_from_frame(frame: pd.DataFrame, source: str = None) -> List[TimeSample]:
    """Rows to samples; errors name the 1-based data row."""

    def build(features, row):
        source_id = row.get("source_id", "")
        return TimeSample(features, float(row["seconds"]), "" if pd.isna(source_id) else str(source_id))

    return _parse_rows(frame, list(ComplexityFeatures.names()) + ["seconds"], source, build)
