"""One encode interface over external encoders and the synthetic codec."""

import logging
import shutil
import threading
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from apps.core.worker_pool import map_keyed
from apps.metrics.domain import QualityMetric, RDCurve, build_rd_curve
from apps.video_io.domain import Clip, ClipMeta
from apps.video_io.y4m import write_y4m_file

from .cache_service import clip_digest, encode_cache
from .domain import EncodeResult, EncoderProfile, SyntheticCodecSpec, normalize_k
from .external import run_external_encode, scratch_dir
from .profiles import with_preset
from .synthetic import synth_encode

logger = logging.getLogger("clipforge.codec_gateway")

ClipLike = Union[Clip, ClipMeta]


class CodecGateway:
    """Common surface: qp_list, frame groups, a preset ladder and encode()."""

    name = "codec"

    def __init__(self, metric=QualityMetric.PSNR):
        self.metric = QualityMetric.parse(metric)
        self._lock = threading.Lock()
        self.encode_count = 0

    @property
    def qp_list(self) -> Tuple[int, ...]:
        raise NotImplementedError

    @property
    def frame_groups(self) -> Tuple[str, ...]:
        raise NotImplementedError

    @property
    def preset_ladder(self) -> Tuple[str, ...]:
        raise NotImplementedError

    @property
    def preset(self) -> Optional[str]:
        raise NotImplementedError

    def with_preset(self, preset: str) -> "CodecGateway":
        raise NotImplementedError

    def _encode(self, clip: ClipLike, qp: float, k_vector: Tuple[float, ...]) -> EncodeResult:
        raise NotImplementedError

    def cache_identity(self, clip: ClipLike) -> Optional[str]:
        return None

    def encode(self, clip: ClipLike, qp: float, k_vector: Optional[Sequence[float]] = None) -> EncodeResult:
        k = normalize_k(k_vector, max(len(self.frame_groups), 1))
        with self._lock:
            self.encode_count += 1
        return self._encode(clip, qp, k)

    def close(self):
        pass


class SyntheticGateway(CodecGateway):
    name = "synthetic"

    def __init__(self, spec: SyntheticCodecSpec, preset: Optional[str] = None, metric=QualityMetric.PSNR):
        super().__init__(metric)
        self.spec = spec
        self._preset = preset or spec.default_preset

    @property
    def qp_list(self):
        return self.spec.qp_list

    @property
    def frame_groups(self):
        return self.spec.frame_groups[: len(self.spec.k_star)]

    @property
    def preset_ladder(self):
        return self.spec.preset_names

    @property
    def preset(self):
        return self._preset

    def with_preset(self, preset):
        return SyntheticGateway(self.spec, preset, self.metric)

    def _encode(self, clip, qp, k_vector):
        return synth_encode(self.spec, clip, qp, self._preset, k_vector)


class ExternalGateway(CodecGateway):
    """Runs a profile's encoder on clips staged as Y4M files in scratch space."""

    def __init__(self, profile: EncoderProfile, metric=QualityMetric.PSNR, clip_paths: Optional[Dict[str, Path]] = None):
        super().__init__(metric)
        self.profile = profile
        self.name = profile.name
        self._paths: Dict[str, Path] = dict(clip_paths or {})
        self._stage_dir: Optional[Path] = None

    @property
    def qp_list(self):
        return self.profile.qp_list

    @property
    def frame_groups(self):
        return self.profile.frame_groups

    @property
    def preset_ladder(self):
        return self.profile.preset_ladder

    @property
    def preset(self):
        return self.profile.preset

    def with_preset(self, preset):
        return ExternalGateway(with_preset(self.profile, preset), self.metric, self._paths)

    def cache_identity(self, clip):
        return f"{self.profile.name}:{self.profile.preset}:{clip_digest(clip)}"

    def register(self, clip: Clip, path: Path):
        """Use an existing file for `clip` instead of staging a copy."""
        self._paths[clip_digest(clip)] = Path(path)

    def _stage(self, clip: Clip) -> Path:
        digest = clip_digest(clip)
        with self._lock:
            if digest not in self._paths:
                if self._stage_dir is None:
                    self._stage_dir = scratch_dir()
                self._paths[digest] = write_y4m_file(self._stage_dir / f"{digest}.y4m", clip)
            return self._paths[digest]

    def _encode(self, clip, qp, k_vector):
        if not isinstance(clip, Clip):
            raise TypeError("external encodes need the clip samples, not just its metadata")
        return run_external_encode(
            self.profile,
            self._stage(clip),
            qp,
            preset=self.profile.preset,
            k_vector=k_vector,
            source=clip,
            metric=self.metric,
        )

    def close(self):
        if self._stage_dir is not None:
            shutil.rmtree(self._stage_dir, ignore_errors=True)
            self._stage_dir = None


def _cached_encode(gateway: CodecGateway, clip: ClipLike, qp: float, k_vector) -> EncodeResult:
    identity = gateway.cache_identity(clip) if encode_cache.enabled else None
    if identity is None:
        return gateway.encode(clip, qp, k_vector)

    k = normalize_k(k_vector, max(len(gateway.frame_groups), 1))
    key = encode_cache.generate_key(identity, gateway.name, gateway.preset, qp, k)
    hit = encode_cache.get_point(key)
    if hit:
        return EncodeResult(
            bitrate_kbps=hit["bitrate_kbps"],
            wall_time=hit["wall_time"],
            qp=qp,
            preset=gateway.preset,
            k_vector=k,
            quality=hit["quality"],
            flags=("cached",),
        )
    result = gateway.encode(clip, qp, k)
    encode_cache.set_point(
        key,
        {"bitrate_kbps": result.bitrate_kbps, "wall_time": result.wall_time, "quality": result.quality},
    )
    return result


def rd_sweep(
    gateway: CodecGateway,
    clip: ClipLike,
    k_vector: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    qp_list: Optional[Sequence[float]] = None,
) -> List[EncodeResult]:
    """Encode at every QP (the gateway's list by default), results ordered by QP."""
    qps = tuple(qp_list) if qp_list else gateway.qp_list
    return map_keyed(lambda qp: _cached_encode(gateway, clip, qp, k_vector), qps, workers)


def curve_from_results(results: Sequence[EncodeResult], metric=QualityMetric.PSNR, source: Optional[str] = None) -> RDCurve:
    samples = []
    for result in results:
        if result.quality is None:
            raise ValueError(f"encode at qp={result.qp} has no quality measurement")
        samples.append((result.bitrate_kbps, result.quality))
    return build_rd_curve(samples, metric, source=source)


def rd_curve(
    gateway: CodecGateway,
    clip: ClipLike,
    k_vector: Optional[Sequence[float]] = None,
    metric=None,
    workers: Optional[int] = None,
    qp_list: Optional[Sequence[float]] = None,
) -> RDCurve:
    metric = QualityMetric.parse(metric) if metric is not None else gateway.metric
    results = rd_sweep(gateway, clip, k_vector, workers, qp_list)
    return curve_from_results(results, metric, source=getattr(clip, "source_id", None))
