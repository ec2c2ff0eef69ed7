import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from apps.core.exceptions import JobConfigError
from apps.metrics.domain import QualityMetric


class ProxyStrategy(str, enum.Enum):
    NONE = "none"
    DOWNSAMPLE = "downsample"
    FAST_PRESET = "fast_preset"


@dataclass(frozen=True)
class EarlyStop:
    min_improvement_pct: float = 0.05
    patience: int = 3
    encode_budget: int = 6 * 50

    def __post_init__(self):
        if self.patience < 1:
            raise JobConfigError(f"patience must be >= 1, got {self.patience}")
        if self.encode_budget < 1:
            raise JobConfigError(f"encode budget must be >= 1, got {self.encode_budget}")


@dataclass(frozen=True)
class LambdaSearchConfig:
    """Search over ln(k); k = 1 keeps the encoder's own lambda."""

    k_bounds: Tuple[float, float] = (1.0 / 16.0, 16.0)
    dims: int = 1
    frame_groups: Tuple[str, ...] = ("ALL",)
    x_tol: float = 1e-2
    max_iter: int = 50
    qp_list: Optional[Tuple[int, ...]] = None
    metric: QualityMetric = QualityMetric.PSNR
    proxy: ProxyStrategy = ProxyStrategy.NONE
    early_stop: EarlyStop = field(default_factory=EarlyStop)
    initial_step: float = 0.5
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "metric", QualityMetric.parse(self.metric))
        object.__setattr__(self, "proxy", ProxyStrategy(self.proxy))
        k_min, k_max = self.k_bounds
        if not (0 < k_min <= 1 <= k_max) or k_min == k_max:
            raise JobConfigError(f"k bounds must satisfy 0 < k_min <= 1 <= k_max, got {self.k_bounds}")
        if self.dims not in (1, 2):
            raise JobConfigError(f"dims must be 1 or 2, got {self.dims}")
        if not self.x_tol > 0 or self.max_iter < 1:
            raise JobConfigError("x_tol must be positive and max_iter >= 1")
        if self.workers is not None and self.workers < 1:
            raise JobConfigError(f"workers must be >= 1, got {self.workers}")

    @property
    def log_bounds(self) -> Tuple[float, float]:
        return math.log(self.k_bounds[0]), math.log(self.k_bounds[1])

    def clamp(self, k: float) -> float:
        return min(max(k, self.k_bounds[0]), self.k_bounds[1])


@dataclass(frozen=True)
class HistoryEntry:
    k: Tuple[float, ...]
    bd_rate: float
    encodes_used: int


@dataclass(frozen=True)
class LambdaSearchOutcome:
    source_id: str
    k_opt: Tuple[float, ...]
    bd_rate_gain: float
    iterations: int
    optimizer_iterations: int
    total_encodes: int
    wall_time: float
    history: Tuple[HistoryEntry, ...] = ()
    terminated_early: Optional[str] = None
    converged: bool = False
    boundary: bool = False
    proxy: ProxyStrategy = ProxyStrategy.NONE
    proxy_encode_time: Optional[float] = None
    full_encode_time: Optional[float] = None
    proxy_k_gain: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["proxy"] = self.proxy.value
        payload["k_opt"] = list(self.k_opt)
        payload["history"] = [
            {"k": list(h.k), "bd_rate": _finite_or_none(h.bd_rate), "encodes_used": h.encodes_used}
            for h in self.history
        ]
        return payload


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def best_so_far(history: List[float]) -> List[float]:
    best, out = math.inf, []
    for value in history:
        best = min(best, value)
        out.append(best)
    return out
