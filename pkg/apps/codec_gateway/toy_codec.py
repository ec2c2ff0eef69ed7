"""Intra-only 8x8 DCT codec with entropy-based rate control.

Rate is measured as the zeroth-order entropy of the quantized levels, not
as a real bitstream. Dead-zone rounding of small coefficients gives the
coring behaviour that makes an encoder act as a mild denoiser.
"""

import logging
import math
import time
from typing import List, Tuple

import numpy as np
from scipy import fft

from apps.metrics.quality import frame_plane_psnr
from apps.video_io.domain import Clip

from .domain import EncodeResult, FrameStat

logger = logging.getLogger("clipforge.codec_gateway")

BLOCK = 8
HEADER_BITS_PER_FRAME = 32
STEP_RANGE = (0.25, 4096.0)
RATE_TOLERANCE = 0.02
MAX_BISECTIONS = 60


def _to_blocks(plane: np.ndarray) -> Tuple[np.ndarray, Tuple[int, int]]:
    h, w = plane.shape
    ph, pw = -h % BLOCK, -w % BLOCK
    padded = np.pad(plane.astype(np.float64), ((0, ph), (0, pw)), mode="edge")
    bh, bw = padded.shape[0] // BLOCK, padded.shape[1] // BLOCK
    blocks = padded.reshape(bh, BLOCK, bw, BLOCK).transpose(0, 2, 1, 3)
    return blocks, (h, w)


def _from_blocks(blocks: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    plane = blocks.transpose(0, 2, 1, 3).reshape(bh * BLOCK, bw * BLOCK)
    return plane[: shape[0], : shape[1]]


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


class _Transformed:
    """DCT coefficients of every plane of every frame, computed once."""

    def __init__(self, clip: Clip):
        self.clip = clip
        self.coefficients: List[List[Tuple[np.ndarray, Tuple[int, int]]]] = []
        for frame in clip.frames:
            planes = []
            for plane in frame.planes:
                blocks, shape = _to_blocks(plane)
                planes.append((fft.dctn(blocks, axes=(2, 3), norm="ortho"), shape))
            self.coefficients.append(planes)
        self.symbol_count = sum(c.size for planes in self.coefficients for c, _ in planes)

    def levels(self, step: float) -> List[List[np.ndarray]]:
        return [[_round_half_away(c / step).astype(np.int64) for c, _ in planes] for planes in self.coefficients]

    def bits_per_frame(self, levels) -> Tuple[float, List[float]]:
        """Total bits under one shared zeroth-order model, and each frame's share."""
        flat = np.concatenate([lv.ravel() for planes in levels for lv in planes])
        values, counts = np.unique(flat, return_counts=True)
        probabilities = counts / flat.size
        code_length = dict(zip(values.tolist(), (-np.log2(probabilities)).tolist()))
        per_frame = []
        for planes in levels:
            frame_flat = np.concatenate([lv.ravel() for lv in planes])
            uniq, cnt = np.unique(frame_flat, return_counts=True)
            per_frame.append(
                float(sum(code_length[u] * c for u, c in zip(uniq.tolist(), cnt.tolist())))
                + HEADER_BITS_PER_FRAME
            )
        return float(sum(per_frame)), per_frame

    def rate_kbps(self, step: float) -> float:
        total, _ = self.bits_per_frame(self.levels(step))
        return total / self.clip.duration / 1000.0

    def reconstruct(self, step: float) -> Clip:
        frames = []
        for frame, planes in zip(self.clip.frames, self.coefficients):
            out = []
            for coeffs, shape in planes:
                q = _round_half_away(coeffs / step) * step
                pixels = _from_blocks(fft.idctn(q, axes=(2, 3), norm="ortho"), shape)
                out.append(np.clip(np.floor(pixels + 0.5), 0, 255).astype(np.uint8))
            frames.append(frame.with_planes(*out))
        return self.clip.with_frames(frames)


def toy_intra_encode(clip: Clip, target_bitrate: float) -> EncodeResult:
    """Encode at `target_bitrate` kbps by bisecting the quantizer step in log space."""
    if not target_bitrate > 0:
        raise ValueError(f"target bitrate must be positive, got {target_bitrate}")
    start = time.perf_counter()
    transformed = _Transformed(clip)
    low, high = STEP_RANGE
    flags = []

    ceiling = transformed.rate_kbps(low)
    floor = transformed.rate_kbps(high)
    if target_bitrate >= ceiling:
        step = low
        flags.append("ceiling")
    elif target_bitrate <= floor:
        step = high
        flags.append("floor")
    else:
        # rate falls as the step grows
        best_step, best_error = high, abs(floor - target_bitrate) / target_bitrate
        log_low, log_high = math.log(low), math.log(high)
        for _ in range(MAX_BISECTIONS):
            mid = 0.5 * (log_low + log_high)
            rate = transformed.rate_kbps(math.exp(mid))
            error = abs(rate - target_bitrate) / target_bitrate
            if error < best_error:
                best_step, best_error = math.exp(mid), error
            if error <= RATE_TOLERANCE:
                break
            if rate > target_bitrate:
                log_low = mid
            else:
                log_high = mid
        step = best_step
        if best_error > RATE_TOLERANCE:
            logger.debug(f"toy rate control missed {target_bitrate:.1f} kbps by {100 * best_error:.2f}%")
            flags.append("rate_miss")

    levels = transformed.levels(step)
    total_bits, frame_bits = transformed.bits_per_frame(levels)
    decoded = transformed.reconstruct(step)
    stats = tuple(
        FrameStat(
            frame_index=i,
            frame_type="I",
            bits=int(round(bits)),
            avg_qp=step,
            q_y=q[0],
            q_u=q[1],
            q_v=q[2],
        )
        for i, (bits, q) in enumerate(
            (bits, frame_plane_psnr(src, out))
            for bits, src, out in zip(frame_bits, clip.frames, decoded.frames)
        )
    )
    return EncodeResult(
        bitrate_kbps=total_bits / clip.duration / 1000.0,
        wall_time=max(time.perf_counter() - start, 1e-9),
        qp=step,
        quality=None,
        output_clip=decoded,
        per_frame_stats=stats,
        flags=tuple(flags),
    )
