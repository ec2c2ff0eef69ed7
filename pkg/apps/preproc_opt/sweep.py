"""Noise level x bitrate x strength sweep of the denoise-then-encode cascade."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from apps.codec_gateway.domain import EncoderProfile
from apps.codec_gateway.external import run_external_encode, scratch_dir
from apps.codec_gateway.toy_codec import toy_intra_encode
from apps.core.exceptions import CurveValidationError, DecodeError, JobConfigError
from apps.core.worker_pool import run_keyed
from apps.metrics.quality import psnr
from apps.video_io.domain import Clip
from apps.video_io.noise import add_gaussian_noise, sigma_for_target_psnr
from apps.video_io.y4m import write_y4m_file
from utils.monitoring import monitor_performance

from .wiener import wiener3d_denoise

logger = logging.getLogger("clipforge.preproc_opt")

Cell = Tuple[float, float, float]
BitrateEncoder = Callable[[Clip, float], Clip]

SWEEP_COLUMNS = ["sigma", "psnr_level", "bitrate", "strength", "final_psnr"]


@dataclass(frozen=True)
class SweepGrid:
    psnr_levels: Tuple[float, ...]
    bitrates: Tuple[float, ...]
    strengths: Tuple[float, ...]

    def __post_init__(self):
        for name in ("psnr_levels", "bitrates", "strengths"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise JobConfigError(f"sweep grid axis {name} is empty")
            object.__setattr__(self, name, values)
        if any(p <= 0 for p in self.psnr_levels) or any(r <= 0 for r in self.bitrates):
            raise JobConfigError("psnr levels and bitrates must be positive")
        if self.strengths[0] != 0 or any(b <= a for a, b in zip(self.strengths, self.strengths[1:])):
            raise JobConfigError(f"strengths must ascend from 0, got {self.strengths}")

    @classmethod
    def default(cls) -> "SweepGrid":
        sigma_max = sigma_for_target_psnr(20.0)
        return cls(
            psnr_levels=(20.0, 25.0, 27.5, 30.0, 35.0, 40.0),
            bitrates=tuple(256.0 * 2**i for i in range(6)),
            strengths=tuple(np.linspace(0.0, 2.0 * sigma_max, 8).tolist()),
        )

    def cells(self) -> List[Cell]:
        return [(p, r, s) for p in self.psnr_levels for r in self.bitrates for s in self.strengths]


@dataclass
class SweepResult:
    cells: Dict[Cell, float]
    clip_ids: Tuple[str, ...]
    holes: List[Cell] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.holes

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "sigma": sigma_for_target_psnr(p),
                "psnr_level": p,
                "bitrate": r,
                "strength": s,
                "final_psnr": self.cells.get((p, r, s), math.nan),
            }
            for p, r, s in sorted(set(self.cells) | set(self.holes))
        ]
        return pd.DataFrame(rows, columns=SWEEP_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, source: Optional[str] = None) -> "SweepResult":
        missing = [c for c in SWEEP_COLUMNS if c not in frame.columns]
        if missing:
            raise CurveValidationError(f"sweep table lacks columns {missing}", source=source)
        cells, holes = {}, []
        for row in frame.itertuples(index=False):
            key = (float(row.psnr_level), float(row.bitrate), float(row.strength))
            if pd.isna(row.final_psnr):
                holes.append(key)
            else:
                cells[key] = float(row.final_psnr)
        return cls(cells=cells, clip_ids=(), holes=holes)


def toy_encoder(clip: Clip, bitrate: float) -> Clip:
    return toy_intra_encode(clip, bitrate).output_clip


class ExternalBitrateEncoder:
    """Bitrate-targeted encode through a profile that uses {BITRATE}."""

    def __init__(self, profile: EncoderProfile):
        if "{BITRATE}" not in profile.command_template:
            raise JobConfigError(f"profile {profile.name} has no {{BITRATE}} placeholder")
        self.profile = profile

    def __call__(self, clip: Clip, bitrate: float) -> Clip:
        staged = write_y4m_file(scratch_dir() / "sweep_input.y4m", clip)
        try:
            qp = self.profile.qp_list[len(self.profile.qp_list) // 2]
            result = run_external_encode(self.profile, staged, qp, source=clip, bitrate_kbps=bitrate)
        finally:
            staged.unlink(missing_ok=True)
            staged.parent.rmdir()
        if result.output_clip is None:
            raise DecodeError(f"profile {self.profile.name} has no decoder for sweep output")
        return result.output_clip


def sweep_cell(clips: Sequence[Clip], encoder: BitrateEncoder, psnr_level: float, bitrate: float, strength: float, seed: int) -> float:
    """Mean PSNR, against the clean clips, of noise -> denoise -> encode."""
    sigma = sigma_for_target_psnr(psnr_level)
    scores = []
    for index, clean in enumerate(clips):
        degraded = add_gaussian_noise(clean, sigma, seed + index)
        filtered = wiener3d_denoise(degraded, strength)
        scores.append(psnr(clean, encoder(filtered, bitrate)))
    return float(np.mean(scores))


@monitor_performance("run_sweep", min_log_time=0.0)
def run_sweep(
    clips: Sequence[Clip],
    grid: SweepGrid,
    encoder: BitrateEncoder = toy_encoder,
    seed: int = 0,
    workers: Optional[int] = None,
) -> SweepResult:
    """Every grid cell runs independently; a failed cell becomes a hole.

    Noise for clip i uses seed + i, so every strength and bitrate at one
    PSNR level sees the same degraded input.
    """
    if not clips:
        raise JobConfigError("run_sweep needs at least one clip")
    tasks = [
        (cell, (lambda c=cell: sweep_cell(clips, encoder, c[0], c[1], c[2], seed)))
        for cell in grid.cells()
    ]
    cells, holes = {}, []
    for outcome in run_keyed(tasks, workers):
        if outcome.ok and math.isfinite(outcome.value):
            cells[outcome.key] = outcome.value
        else:
            holes.append(outcome.key)
    if holes:
        logger.warning(f"sweep finished with {len(holes)} failed cells")
    return SweepResult(cells=cells, clip_ids=tuple(c.source_id for c in clips), holes=holes)


def argmax_strengths(sweep: SweepResult) -> List[Tuple[float, float, float]]:
    """(sigma, bitrate, best strength) per row; ties go to the smaller strength."""
    rows: Dict[Tuple[float, float], List[Tuple[float, Optional[float]]]] = {}
    for (p, r, s), value in sweep.cells.items():
        rows.setdefault((p, r), []).append((s, value))
    for p, r, s in sweep.holes:
        rows.setdefault((p, r), []).append((s, None))

    table = []
    for (p, r), entries in sorted(rows.items()):
        if any(value is None for _, value in entries):
            logger.warning(f"skipping sweep row psnr={p:g} bitrate={r:g}: it has holes")
            continue
        entries.sort()
        best_strength, best_value = entries[0]
        for strength, value in entries[1:]:
            if value > best_value:
                best_strength, best_value = strength, value
        table.append((sigma_for_target_psnr(p), r, best_strength))
    return table
