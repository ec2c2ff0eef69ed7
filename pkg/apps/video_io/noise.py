import math

import numpy as np

from .domain import Clip

PEAK = 255.0


def sigma_for_target_psnr(target_psnr: float) -> float:
    """Noise std whose MSE gives `target_psnr` dB against an 8-bit peak."""
    if not target_psnr > 0:
        raise ValueError(f"target PSNR must be positive, got {target_psnr}")
    return PEAK * 10.0 ** (-target_psnr / 20.0)


def _standard_normals(rng: np.random.Generator, count: int) -> np.ndarray:
    # Box-Muller on (0, 1] uniforms
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    return np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:count]


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def add_gaussian_noise(clip: Clip, sigma: float, seed: int) -> Clip:
    """Perturb every sample of every plane with i.i.d. N(0, sigma^2).

    Draws come from a Philox generator seeded with `seed`, in frame order and
    Y, U, V plane order within a frame.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return clip

    rng = np.random.Generator(np.random.Philox(seed))
    noisy = []
    for frame in clip.frames:
        planes = []
        for plane in frame.planes:
            noise = _standard_normals(rng, plane.size).reshape(plane.shape) * sigma
            values = _round_half_away(plane.astype(np.float64) + noise)
            planes.append(np.clip(values, 0, 255).astype(np.uint8))
        noisy.append(frame.with_planes(*planes))
    return clip.with_frames(noisy)


def mean_brightness(clip: Clip) -> float:
    """Arithmetic mean of all luma samples."""
    total = sum(int(frame.y.sum(dtype=np.int64)) for frame in clip.frames)
    count = sum(frame.y.size for frame in clip.frames)
    return total / count
