"""Synthetic encode-time corpora with a known time law.

seconds = c * pixels * frames * preset_factor(preset) * 2 ** (-(crf - 22) / 10),
optionally times a log-normal factor exp(noise_sigma * N(0, 1)).
"""

from typing import List

import numpy as np

from .complexity import ComplexityFeatures, TimeSample

TIME_COEFFICIENT = 2e-8
PRESET_GROWTH = 1.6
HEIGHTS = (360, 480, 720, 1080, 2160)
FRAME_RATES = (24.0, 25.0, 30.0, 50.0, 60.0)


def preset_factor(preset: float) -> float:
    return PRESET_GROWTH ** preset


def law_seconds(total_pixels: float, n_frames: float, preset: float, crf: float) -> float:
    return TIME_COEFFICIENT * total_pixels * n_frames * preset_factor(preset) * 2.0 ** (-(crf - 22.0) / 10.0)


def generate_time_corpus(n_samples: int, seed: int = 0, noise_sigma: float = 0.0, n_sources: int = 20) -> List[TimeSample]:
    """Samples drawn per source: resolution, frame rate and content energies
    belong to the source, presets and CRFs vary per sample."""
    rng = np.random.default_rng(seed)
    sources = []
    for _ in range(n_sources):
        height = int(rng.choice(HEIGHTS))
        se = float(rng.uniform(1.0, 40.0))
        te = float(rng.uniform(0.0, 10.0))
        sources.append(
            {
                "height": height,
                "width": int(round(height * 16 / 9 / 2)) * 2,
                "frame_rate": float(rng.choice(FRAME_RATES)),
                "se": se,
                "te": te,
                "brightness": float(rng.uniform(16.0, 235.0)),
            }
        )

    samples = []
    for i in range(n_samples):
        src_index = i % n_sources
        src = sources[src_index]
        n_frames = float(rng.integers(30, 601))
        preset = float(rng.integers(0, 9))
        crf = float(rng.integers(18, 41))
        pixels = float(src["width"] * src["height"])
        seconds = law_seconds(pixels, n_frames, preset, crf)
        if noise_sigma > 0:
            seconds *= float(np.exp(noise_sigma * rng.standard_normal()))
        features = ComplexityFeatures(
            height=float(src["height"]),
            total_pixels=pixels,
            frame_rate=src["frame_rate"],
            n_frames=n_frames,
            se_mean=src["se"],
            se_max=src["se"] * 1.5,
            se_median=src["se"],
            se_std=src["se"] * 0.2,
            te_mean=src["te"],
            te_max=src["te"] * 2.0,
            te_median=src["te"],
            te_std=src["te"] * 0.3,
            mean_brightness=src["brightness"],
            preset=preset,
            target_crf=crf,
        )
        samples.append(TimeSample(features, seconds, f"src{src_index:03d}"))
    return samples
