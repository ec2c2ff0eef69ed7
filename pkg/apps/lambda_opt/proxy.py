"""Cheaper stand-ins for the k search: a downscaled clip or the fastest preset."""

import logging
import math
from dataclasses import replace
from typing import Tuple, Union

from apps.codec_gateway.domain import EncoderProfile
from apps.codec_gateway.gateway import CodecGateway
from apps.codec_gateway.profiles import with_preset
from apps.core.exceptions import ClipforgeError
from apps.metrics.bjontegaard import bd_rate
from apps.video_io.domain import Clip, ClipMeta
from apps.video_io.resample import proxy_resolution, resize_to_proxy
from utils.monitoring import monitor_performance

from .domain import LambdaSearchConfig, LambdaSearchOutcome, ProxyStrategy
from .search import NO_IMPROVEMENT, SearchState, optimize_k

logger = logging.getLogger("clipforge.lambda_opt")


def make_proxy(
    clip: Union[Clip, ClipMeta],
    encoder: Union[CodecGateway, EncoderProfile],
    strategy: ProxyStrategy,
) -> Tuple[Union[Clip, ClipMeta], Union[CodecGateway, EncoderProfile]]:
    """Return the (clip, encoder) pair the search should run on."""
    strategy = ProxyStrategy(strategy)
    if strategy is ProxyStrategy.NONE:
        raise ValueError("make_proxy needs a proxy strategy other than 'none'")

    if strategy is ProxyStrategy.FAST_PRESET:
        ladder = encoder.preset_ladder
        if not ladder:
            logger.warning(f"{encoder.name} has no preset ladder; proxy keeps the current preset")
            return clip, encoder
        fastest = ladder[0]
        if isinstance(encoder, EncoderProfile):
            return clip, with_preset(encoder, fastest)
        return clip, encoder.with_preset(fastest)

    width, height = proxy_resolution(clip.width, clip.height)
    if (width, height) == (clip.width, clip.height):
        logger.warning(
            f"{clip.source_id or 'clip'} is already at {clip.width}x{clip.height}; downsample proxy is the identity"
        )
        return clip, encoder
    if isinstance(clip, ClipMeta):
        return clip.resized(width, height), encoder
    return resize_to_proxy(clip), encoder


@monitor_performance("optimize_with_proxy", min_log_time=0.0)
def optimize_with_proxy(gateway: CodecGateway, clip, config: LambdaSearchConfig) -> LambdaSearchOutcome:
    """Search k on the proxy, then measure that k once at full fidelity."""
    proxy_clip, proxy_gateway = make_proxy(clip, gateway, config.proxy)
    proxy_outcome = optimize_k(proxy_gateway, proxy_clip, config)

    full = SearchState(gateway, clip, config)
    k_opt = proxy_outcome.k_opt
    gain = 0.0
    terminated = proxy_outcome.terminated_early
    if any(k != 1.0 for k in k_opt):
        try:
            baseline = full.sweep((1.0,) * full.k_dims)
            test = full.sweep(full.k_vector(tuple(math.log(k) for k in k_opt)))
            gain = bd_rate(test, baseline)
        except (ClipforgeError, ValueError) as exc:
            logger.warning(f"full-fidelity check of k={k_opt} failed: {exc}")
            gain = math.inf
        if not (math.isfinite(gain) and gain < 0):
            logger.info(f"proxy k={k_opt} does not help at full fidelity; keeping k=1")
            k_opt, gain, terminated = (1.0,) * config.dims, 0.0, NO_IMPROVEMENT

    return replace(
        proxy_outcome,
        source_id=getattr(clip, "source_id", ""),
        k_opt=tuple(k_opt),
        bd_rate_gain=gain,
        total_encodes=proxy_outcome.total_encodes + full.encodes,
        wall_time=proxy_outcome.wall_time + full.encode_time,
        terminated_early=terminated,
        proxy_encode_time=proxy_outcome.wall_time,
        full_encode_time=full.encode_time,
        proxy_k_gain=proxy_outcome.bd_rate_gain,
    )
