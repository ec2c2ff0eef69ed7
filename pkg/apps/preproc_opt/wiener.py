"""Overlapped 3-D block-DCT Wiener shrinkage."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft

from apps.video_io.domain import Clip

BLOCK = 8
STRIDE = BLOCK // 2
TEMPORAL_WINDOW = 3


def wiener_gains(coefficients: np.ndarray, strength: float) -> np.ndarray:
    """Per-coefficient gains max(0, |C|^2 - s^2) / |C|^2 for (..., 3, 8, 8) blocks.

    The orthonormal transform keeps white noise at variance s^2 in every
    coefficient. The DC term of each block has gain 1.
    """
    energy = np.square(coefficients)
    noise = strength * strength
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = np.where(energy > 0, np.maximum(energy - noise, 0.0) / energy, 0.0)
    gains[..., 0, 0, 0] = 1.0
    return gains


def _temporal_window(stack: np.ndarray, t: int) -> np.ndarray:
    last = stack.shape[0] - 1
    return stack[[min(max(t + d, 0), last) for d in (-1, 0, 1)]]


def _denoise_plane_stack(stack: np.ndarray, strength: float) -> np.ndarray:
    n_frames, height, width = stack.shape
    pad_h = (STRIDE, STRIDE + (-height % STRIDE))
    pad_w = (STRIDE, STRIDE + (-width % STRIDE))
    padded = np.pad(stack.astype(np.float64), ((0, 0), pad_h, pad_w), mode="symmetric")
    out = np.empty(stack.shape, dtype=np.float64)

    for t in range(n_frames):
        window = _temporal_window(padded, t)
        blocks = sliding_window_view(window, (BLOCK, BLOCK), axis=(1, 2))[:, ::STRIDE, ::STRIDE]
        # (3, by, bx, 8, 8) -> (by, bx, 3, 8, 8)
        blocks = np.moveaxis(blocks, 0, 2)
        coefficients = fft.dctn(blocks, axes=(-3, -2, -1), norm="ortho")
        filtered = fft.idctn(coefficients * wiener_gains(coefficients, strength), axes=(-3, -2, -1), norm="ortho")
        centre = filtered[:, :, 1]

        accum = np.zeros(padded.shape[1:], dtype=np.float64)
        weight = np.zeros(padded.shape[1:], dtype=np.float64)
        for by in range(centre.shape[0]):
            y0 = by * STRIDE
            for bx in range(centre.shape[1]):
                x0 = bx * STRIDE
                accum[y0 : y0 + BLOCK, x0 : x0 + BLOCK] += centre[by, bx]
                weight[y0 : y0 + BLOCK, x0 : x0 + BLOCK] += 1.0
        plane = accum / weight
        out[t] = plane[STRIDE : STRIDE + height, STRIDE : STRIDE + width]
    return out


def wiener3d_denoise(clip: Clip, strength: float) -> Clip:
    """Denoise every plane; `strength` is the assumed noise standard deviation.

    Strength 0 returns the input clip untouched.
    """
    if strength < 0:
        raise ValueError(f"strength must be >= 0, got {strength}")
    if strength == 0:
        return clip

    planes = []
    for index in range(3):
        filtered = _denoise_plane_stack(clip.plane_stack(index), strength)
        planes.append(np.clip(np.floor(filtered + 0.5), 0, 255).astype(np.uint8))
    frames = [
        frame.with_planes(planes[0][t], planes[1][t], planes[2][t]) for t, frame in enumerate(clip.frames)
    ]
    return clip.with_frames(frames)
