"""First-pass encode statistics turned into the k-predictor feature vector."""

import hashlib
import math
from dataclasses import astuple, dataclass, fields
from typing import Optional, Sequence, Tuple

import numpy as np

from apps.codec_gateway.domain import FrameStat
from apps.core.exceptions import StatsParseError
from apps.video_io.domain import Clip, ClipMeta

# Frame types by the role they play in a GOP
INTRA_TYPES = ("I", "KF")
P_LIKE_TYPES = ("P", "GF")
B_LIKE_TYPES = ("B", "ARF")

INTERACTIONS = (
    ("bitrate", "pb_ratio_y"),
    ("bitrate", "pb_ratio_u"),
    ("bitrate", "pb_ratio_v"),
    ("bitrate", "pb_count"),
    ("bitrate", "pb_size"),
    ("pb_ratio_y", "pb_size"),
    ("pb_ratio_u", "pb_size"),
    ("pb_ratio_v", "pb_size"),
    ("pb_count", "pb_size"),
    ("pb_ratio_y", "pb_ratio_u"),
    ("pb_ratio_y", "pb_ratio_v"),
    ("pb_ratio_u", "pb_ratio_v"),
)


@dataclass(frozen=True)
class KFeatureVector:
    width: float
    height: float
    bitrate: float
    i_q_y: float
    i_q_u: float
    i_q_v: float
    p_q_y: float
    p_q_u: float
    p_q_v: float
    b_q_y: float
    b_q_u: float
    b_q_v: float
    p_count: float
    p_avg_qp: float
    p_bitrate: float
    b_count: float
    b_avg_qp: float
    b_bitrate: float
    pb_ratio_y: float
    pb_ratio_u: float
    pb_ratio_v: float
    pb_count: float
    pb_bitrate: float
    pb_size: float
    bitrate_x_pb_ratio_y: float
    bitrate_x_pb_ratio_u: float
    bitrate_x_pb_ratio_v: float
    bitrate_x_pb_count: float
    bitrate_x_pb_size: float
    pb_ratio_y_x_pb_size: float
    pb_ratio_u_x_pb_size: float
    pb_ratio_v_x_pb_size: float
    pb_count_x_pb_size: float
    pb_ratio_y_x_pb_ratio_u: float
    pb_ratio_y_x_pb_ratio_v: float
    pb_ratio_u_x_pb_ratio_v: float
    missing_frame_types: Tuple[str, ...] = ()

    @classmethod
    def names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls) if f.name != "missing_frame_types")

    @classmethod
    def schema_hash(cls) -> str:
        return hashlib.sha256(",".join(cls.names()).encode()).hexdigest()[:16]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self)[: len(self.names())], dtype=np.float64)

    def interactions_consistent(self, rel_tol: float = 1e-9) -> bool:
        for left, right in INTERACTIONS:
            expected = getattr(self, left) * getattr(self, right)
            if not math.isclose(getattr(self, f"{left}_x_{right}"), expected, rel_tol=rel_tol, abs_tol=1e-12):
                return False
        return True


def _mean(values) -> float:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else 0.0


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def extract_k_features(
    stats: Sequence[FrameStat],
    clip_meta: ClipMeta,
    bitrate_kbps: Optional[float] = None,
) -> KFeatureVector:
    """Aggregate per-frame stats from a k = 1 encode into the feature vector.

    Bitrates are kbit/s over the clip duration. P/B ratios are zero, and the
    missing type is listed, when a clip has no P-like or no B-like frames.
    """
    duration = clip_meta.duration
    groups = {
        "i": [s for s in stats if s.frame_type in INTRA_TYPES],
        "p": [s for s in stats if s.frame_type in P_LIKE_TYPES],
        "b": [s for s in stats if s.frame_type in B_LIKE_TYPES],
    }
    total_bits = sum(s.bits for s in stats)
    bitrate = bitrate_kbps if bitrate_kbps is not None else total_bits / duration / 1000.0

    values = {"width": float(clip_meta.width), "height": float(clip_meta.height), "bitrate": bitrate}
    for prefix, group in groups.items():
        for channel in ("y", "u", "v"):
            values[f"{prefix}_q_{channel}"] = _mean(getattr(s, f"q_{channel}") for s in group)
    for prefix in ("p", "b"):
        group = groups[prefix]
        values[f"{prefix}_count"] = float(len(group))
        values[f"{prefix}_avg_qp"] = _mean(s.avg_qp for s in group)
        values[f"{prefix}_bitrate"] = sum(s.bits for s in group) / duration / 1000.0

    has_p, has_b = bool(groups["p"]), bool(groups["b"])
    both = has_p and has_b
    for channel in ("y", "u", "v"):
        values[f"pb_ratio_{channel}"] = (
            _ratio(values[f"p_q_{channel}"], values[f"b_q_{channel}"]) if both else 0.0
        )
    values["pb_count"] = _ratio(values["p_count"], values["b_count"]) if both else 0.0
    values["pb_bitrate"] = _ratio(values["p_bitrate"], values["b_bitrate"]) if both else 0.0
    p_size = _ratio(sum(s.bits for s in groups["p"]), len(groups["p"]))
    b_size = _ratio(sum(s.bits for s in groups["b"]), len(groups["b"]))
    values["pb_size"] = _ratio(p_size, b_size) if both else 0.0

    for left, right in INTERACTIONS:
        values[f"{left}_x_{right}"] = values[left] * values[right]

    missing = tuple(name for name, present in (("P", has_p), ("B", has_b)) if not present)
    return KFeatureVector(**values, missing_frame_types=missing)


def first_pass_features(gateway, clip, qp: Optional[float] = None) -> KFeatureVector:
    """Encode once at k = 1 (middle QP of the gateway by default) and extract features."""
    qps = gateway.qp_list
    qp = qp if qp is not None else qps[len(qps) // 2]
    result = gateway.encode(clip, qp, None)
    if not result.per_frame_stats:
        raise StatsParseError(f"first-pass encode of {getattr(clip, 'source_id', clip)} produced no frame stats")
    meta = clip.meta if isinstance(clip, Clip) else clip
    return extract_k_features(result.per_frame_stats, meta, bitrate_kbps=result.bitrate_kbps)
