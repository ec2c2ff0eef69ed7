"""Analytic stand-in codec used to exercise the tuning loops without encoders.

Quality is a fixed affine function of QP, and the rate at that quality is
the anchor rate scaled by a k-dependent multiplier whose minimum sits at the
planted k_star. Encode time follows a megapixel-frame time law.
"""

import hashlib
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from apps.video_io.domain import Clip, ClipMeta

from .domain import EncodeResult, FrameStat, SyntheticCodecSpec, normalize_k

GOP_LENGTH = 4


def qp_to_quality(qp: float) -> float:
    return 60.0 - 0.8 * qp


def anchor_rate(spec: SyntheticCodecSpec, quality: float) -> float:
    return math.exp((quality - spec.alpha) / spec.beta)


def rate_multiplier(gamma: float, k_vector: Sequence[float], k_star: Sequence[float]) -> float:
    """Product over frame groups of 1 + gamma*(ln k - ln k*)^2."""
    multiplier = 1.0
    for k, target in zip(k_vector, k_star):
        multiplier *= 1.0 + gamma * (math.log(k) - math.log(target)) ** 2
    return multiplier


def closed_form_bd_rate(gamma: float, k_vector: Sequence[float], k_star: Sequence[float]) -> float:
    """BD-rate of encoding at k_vector against k = 1, for the noiseless model."""
    at_k = rate_multiplier(gamma, k_vector, k_star)
    at_one = rate_multiplier(gamma, (1.0,) * len(k_star), k_star)
    return 100.0 * (at_k / at_one - 1.0)


def effective_k_star(spec: SyntheticCodecSpec, meta: ClipMeta, preset: Optional[str]) -> Tuple[float, ...]:
    """k_star as seen by a proxy encode (reduced resolution or a faster preset)."""
    if spec.proxy_k_drift == 1.0:
        return spec.k_star
    names = spec.preset_names
    faster = names.index(preset or spec.default_preset) < names.index(spec.default_preset)
    smaller = spec.native_height is not None and meta.height < spec.native_height
    if faster or smaller:
        return tuple(k * spec.proxy_k_drift for k in spec.k_star)
    return spec.k_star


def _jitter_rng(spec: SyntheticCodecSpec, meta: ClipMeta, qp, preset, k) -> np.random.Generator:
    key = f"{meta.source_id}|{meta.width}x{meta.height}|{meta.n_frames}|{qp!r}|{preset}|{k!r}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    entropy = [spec.seed & 0xFFFFFFFF, int.from_bytes(digest, "little")]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def synthetic_frame_stats(
    spec: SyntheticCodecSpec, meta: ClipMeta, qp: float, bitrate_kbps: float, k_star: Sequence[float]
) -> Tuple[FrameStat, ...]:
    """Deterministic I/P/B stats table whose P/B balance follows k_star."""
    q = qp_to_quality(qp)
    k_p = k_star[0]
    k_b = k_star[-1]
    weights = {
        "I": 6.0,
        "P": 2.0 * k_p ** 0.25,
        "B": 1.0 / k_b ** 0.25,
    }
    types = ["I" if i == 0 else ("P" if i % GOP_LENGTH == 0 else "B") for i in range(meta.n_frames)]
    total_weight = sum(weights[t] for t in types)
    total_bits = bitrate_kbps * 1000.0 * meta.duration
    qp_offset = {"I": -3.0, "P": 1.0, "B": 2.0 + math.log2(k_b)}
    quality_offset = {"I": 1.0, "P": 0.0, "B": -0.5}
    return tuple(
        FrameStat(
            frame_index=i,
            frame_type=t,
            bits=int(round(total_bits * weights[t] / total_weight)),
            avg_qp=qp + qp_offset[t],
            q_y=q + quality_offset[t],
            q_u=q + quality_offset[t] + 2.0,
            q_v=q + quality_offset[t] + 2.0,
        )
        for i, t in enumerate(types)
    )


def synth_encode(
    spec: SyntheticCodecSpec,
    clip_meta: Union[Clip, ClipMeta],
    qp: float,
    preset: Optional[str] = None,
    k_vector: Optional[Sequence[float]] = None,
) -> EncodeResult:
    meta = clip_meta.meta if isinstance(clip_meta, Clip) else clip_meta
    preset = preset or spec.default_preset
    k = normalize_k(k_vector, len(spec.k_star))[: len(spec.k_star)]
    k_star = effective_k_star(spec, meta, preset)

    quality = qp_to_quality(qp)
    rate = anchor_rate(spec, quality) * rate_multiplier(spec.gamma, k, k_star)
    wall_time = (
        spec.time_coeff
        * meta.megapixel_frames
        * spec.speed_factor(preset)
        * 2.0 ** ((spec.crf_ref - qp) / spec.step_ref)
    )
    if spec.noise_std_log > 0:
        rng = _jitter_rng(spec, meta, qp, preset, k)
        rate *= math.exp(rng.normal(0.0, spec.noise_std_log))
        wall_time *= math.exp(rng.normal(0.0, spec.noise_std_log))

    return EncodeResult(
        bitrate_kbps=rate,
        wall_time=wall_time,
        qp=qp,
        preset=preset,
        k_vector=k,
        quality=quality,
        per_frame_stats=synthetic_frame_stats(spec, meta, qp, rate, k_star),
    )
