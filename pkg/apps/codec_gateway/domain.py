import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from apps.core.exceptions import StatsParseError
from apps.video_io.domain import Clip

FRAME_TYPES = ("I", "P", "B", "KF", "GF", "ARF")
FRAME_STAT_COLUMNS = ["frame_index", "frame_type", "bits", "avg_qp", "q_y", "q_u", "q_v"]

REQUIRED_PLACEHOLDERS = ("{INPUT}", "{OUTPUT}", "{QP}")
K_PLACEHOLDERS = ("{K1}", "{K2}")
STATS_FORMATS = ("csv", "x264")


@dataclass(frozen=True)
class FrameStat:
    frame_index: int
    frame_type: str
    bits: int
    avg_qp: float
    q_y: Optional[float] = None
    q_u: Optional[float] = None
    q_v: Optional[float] = None

    def __post_init__(self):
        if self.frame_type not in FRAME_TYPES:
            raise StatsParseError(
                f"frame {self.frame_index}: unknown frame type {self.frame_type!r}"
            )
        if self.bits < 0 or self.frame_index < 0:
            raise StatsParseError(f"frame {self.frame_index}: negative bits or index")

    def as_row(self):
        return {name: getattr(self, name) for name in FRAME_STAT_COLUMNS}


@dataclass(frozen=True)
class EncoderProfile:
    """An encoder driven through a shell-free command template."""

    name: str
    command_template: str
    qp_list: Tuple[int, ...]
    frame_groups: Tuple[str, ...] = ("ALL",)
    preset_ladder: Tuple[str, ...] = ()
    default_preset: Optional[str] = None
    decode_command_template: Optional[str] = None
    output_suffix: str = ".bin"
    stats_format: str = "csv"
    preset: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "qp_list", tuple(self.qp_list))
        object.__setattr__(self, "frame_groups", tuple(self.frame_groups))
        object.__setattr__(self, "preset_ladder", tuple(self.preset_ladder))
        missing = [p for p in REQUIRED_PLACEHOLDERS if p not in self.command_template]
        if missing:
            raise ValueError(f"profile {self.name}: template lacks {', '.join(missing)}")
        if len(self.qp_list) < 4 or any(b <= a for a, b in zip(self.qp_list, self.qp_list[1:])):
            raise ValueError(f"profile {self.name}: qp_list must be strictly increasing with >= 4 entries")
        if self.stats_format not in STATS_FORMATS:
            raise ValueError(f"profile {self.name}: unknown stats format {self.stats_format!r}")
        k_used = sum(1 for p in K_PLACEHOLDERS if p in self.command_template)
        if k_used > len(self.frame_groups):
            raise ValueError(f"profile {self.name}: {k_used} k placeholders for {len(self.frame_groups)} frame groups")
        if self.preset is None and self.default_preset is not None:
            object.__setattr__(self, "preset", self.default_preset)

    @property
    def k_slots(self) -> int:
        return sum(1 for p in K_PLACEHOLDERS if p in self.command_template)

    @property
    def fastest_preset(self) -> Optional[str]:
        return self.preset_ladder[0] if self.preset_ladder else None


@dataclass(frozen=True)
class EncodeResult:
    bitrate_kbps: float
    wall_time: float
    qp: Optional[float] = None
    preset: Optional[str] = None
    k_vector: Tuple[float, ...] = (1.0,)
    quality: Optional[float] = None
    output_clip: Optional[Clip] = field(default=None, compare=False, repr=False)
    per_frame_stats: Optional[Tuple[FrameStat, ...]] = field(default=None, compare=False, repr=False)
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if not (math.isfinite(self.bitrate_kbps) and self.bitrate_kbps > 0):
            raise ValueError(f"bitrate must be positive, got {self.bitrate_kbps}")
        if not self.wall_time > 0:
            raise ValueError(f"wall time must be positive, got {self.wall_time}")


@dataclass(frozen=True)
class SyntheticCodecSpec:
    """Analytic codec: quality = alpha + beta*ln(anchor rate), rate scaled by a
    k-dependent multiplier minimized at k_star."""

    alpha: float = 10.0
    beta: float = 4.0
    k_star: Tuple[float, ...] = (1.0,)
    gamma: float = 0.5
    time_coeff: float = 0.05
    preset_speed_factors: Tuple[Tuple[str, float], ...] = (
        ("fast", 0.01),
        ("medium", 1.0),
        ("slow", 2.0),
    )
    default_preset: str = "medium"
    noise_std_log: float = 0.0
    seed: int = 0
    crf_ref: float = 32.0
    step_ref: float = 6.0
    native_height: Optional[int] = None
    proxy_k_drift: float = 1.0
    qp_list: Tuple[int, ...] = (22, 27, 32, 37, 42)
    frame_groups: Tuple[str, ...] = ("ALL",)

    def __post_init__(self):
        object.__setattr__(self, "k_star", tuple(float(k) for k in self.k_star))
        object.__setattr__(self, "preset_speed_factors", tuple(tuple(p) for p in self.preset_speed_factors))
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not self.k_star or any(k <= 0 for k in self.k_star):
            raise ValueError("k_star entries must be positive")
        if self.default_preset not in self.preset_names:
            raise ValueError(f"default preset {self.default_preset!r} not in ladder")
        if not self.proxy_k_drift > 0:
            raise ValueError("proxy_k_drift must be positive")
        if len(self.frame_groups) < len(self.k_star):
            object.__setattr__(
                self, "frame_groups", tuple(f"G{i + 1}" for i in range(len(self.k_star)))
            )

    @property
    def preset_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.preset_speed_factors)

    def speed_factor(self, preset: Optional[str]) -> float:
        preset = preset or self.default_preset
        for name, factor in self.preset_speed_factors:
            if name == preset:
                return factor
        raise ValueError(f"unknown preset {preset!r}")


def normalize_k(k_vector: Optional[Sequence[float]], dims: int) -> Tuple[float, ...]:
    """Pad or validate a k vector to `dims` entries (missing entries are 1)."""
    if k_vector is None:
        return (1.0,) * dims
    k = tuple(float(v) for v in k_vector)
    if any(not (math.isfinite(v) and v > 0) for v in k):
        raise ValueError(f"k entries must be positive and finite, got {k}")
    if len(k) < dims:
        k = k + (1.0,) * (dims - len(k))
    return k
