"""Deterministic synthetic test content."""

import numpy as np

from .domain import ChromaSubsampling, Clip


def textured_clip(width: int = 128, height: int = 128, n_frames: int = 12, seed: int = 0, source_id: str = "") -> Clip:
    """Smooth gradients, a drifting sinusoidal texture and a few flat patches.

    Content depends only on (width, height, n_frames, seed).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    fx, fy = rng.uniform(0.02, 0.12, size=2)
    phase = rng.uniform(0, 2 * np.pi)
    patches = [
        (int(rng.integers(0, max(height - 16, 1))), int(rng.integers(0, max(width - 16, 1))), float(rng.uniform(40, 220)))
        for _ in range(3)
    ]

    luma, chroma_u, chroma_v = [], [], []
    ch, cw = ChromaSubsampling.C420.chroma_shape(height, width)
    for t in range(n_frames):
        plane = 64.0 + 96.0 * (xx / max(width - 1, 1)) + 24.0 * np.sin(2 * np.pi * (fx * xx + fy * yy) + phase + 0.3 * t)
        for y0, x0, value in patches:
            y0 = (y0 + t) % max(height - 16, 1)
            plane[y0 : y0 + 16, x0 : x0 + 16] = value
        luma.append(np.clip(np.floor(plane + 0.5), 0, 255).astype(np.uint8))
        chroma_u.append(np.full((ch, cw), 128 + (t % 3), dtype=np.uint8))
        chroma_v.append(np.full((ch, cw), 120, dtype=np.uint8))

    return Clip.from_planes(np.stack(luma), np.stack(chroma_u), np.stack(chroma_v), source_id=source_id or f"textured{seed}")
