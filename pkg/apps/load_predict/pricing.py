"""Cloud transcoding cost estimates from a structured price table."""

import logging
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

from django.conf import settings

from apps.core.exceptions import JobConfigError, PricingKeyError

logger = logging.getLogger("clipforge.load_predict")

SECONDS_PER_MINUTE = Decimal(60)
SECONDS_PER_HOUR = Decimal(3600)


class PricingMode(str, Enum):
    PER_MINUTE = "per_minute"
    COMPUTE_TIME = "compute_time"
    RESERVED = "reserved"


def _decimal(value) -> Decimal:
    return value if isinstance(value, Decimal) else Decimal(str(value))


def resolution_class(height: int) -> str:
    if height <= 576:
        return "SD"
    if height <= 1080:
        return "HD"
    return "UHD"


def framerate_class(frame_rate: float) -> str:
    if frame_rate <= 30:
        return "30"
    if frame_rate <= 60:
        return "60"
    return "120"


RateKey = Tuple[str, str, str, str, str]


@dataclass(frozen=True)
class PricingTable:
    per_minute_rates: Mapping[RateKey, Decimal]
    compute_rates: Mapping[str, Decimal]
    reserved_rates: Mapping[str, Decimal] = field(default_factory=dict)
    currency: str = "USD"
    captured: str = ""

    def __post_init__(self):
        for table in (self.per_minute_rates, self.compute_rates, self.reserved_rates):
            for key, rate in table.items():
                if rate < 0:
                    raise JobConfigError(f"negative price for {key}")

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "PricingTable":
        per_minute = {
            (row["tier"], row["codec"], row["resolution"], str(row["framerate"]), row["region"]): _decimal(row["rate"])
            for row in payload.get("per_minute_rates", [])
        }
        return cls(
            per_minute_rates=per_minute,
            compute_rates={k: _decimal(v) for k, v in payload.get("compute_rates", {}).items()},
            reserved_rates={k: _decimal(v) for k, v in payload.get("reserved_rates", {}).items()},
            currency=payload.get("currency", "USD"),
            captured=payload.get("captured", ""),
        )

    @classmethod
    def default(cls) -> "PricingTable":
        return cls.from_dict(settings.PRICING_TABLE)

    def per_minute_rate(self, key: RateKey) -> Decimal:
        try:
            return self.per_minute_rates[key]
        except KeyError:
            raise PricingKeyError(dict(zip(("tier", "codec", "resolution", "framerate", "region"), key))) from None

    def compute_rate(self, instance_class: str) -> Decimal:
        try:
            return self.compute_rates[instance_class]
        except KeyError:
            raise PricingKeyError({"instance_class": instance_class}) from None

    def reserved_rate(self, region: str) -> Decimal:
        try:
            return self.reserved_rates[region]
        except KeyError:
            raise PricingKeyError({"reserved_region": region}) from None


@dataclass(frozen=True)
class TranscodeJob:
    duration_seconds: float
    height: int
    frame_rate: float
    codecs: Tuple[str, ...] = ("h264",)
    tier: str = "basic"
    region: str = "us-east-1"
    instance_class: Optional[str] = None


@dataclass(frozen=True)
class CostLine:
    item: str
    quantity: Decimal
    unit: str
    rate: Decimal
    amount: Decimal


@dataclass(frozen=True)
class CostEstimate:
    mode: PricingMode
    total: Decimal
    currency: str
    lines: Tuple[CostLine, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "total": str(self.total),
            "currency": self.currency,
            "lines": [
                {
                    "item": line.item,
                    "quantity": str(line.quantity),
                    "unit": line.unit,
                    "rate": str(line.rate),
                    "amount": str(line.amount),
                }
                for line in self.lines
            ],
        }


def estimate_cost(
    job: TranscodeJob,
    pricing: Optional[PricingTable] = None,
    mode=PricingMode.PER_MINUTE,
    predicted_seconds: Optional[float] = None,
) -> CostEstimate:
    """Itemized cost of one job.

    per_minute bills output minutes for each requested codec, compute_time
    bills the predicted encode time at the instance's hourly rate, reserved
    is the flat monthly slot price of the region.
    """
    pricing = pricing or PricingTable.default()
    mode = PricingMode(mode)
    lines: List[CostLine] = []

    if mode is PricingMode.PER_MINUTE:
        minutes = _decimal(job.duration_seconds) / SECONDS_PER_MINUTE
        res, fps = resolution_class(job.height), framerate_class(job.frame_rate)
        for codec in job.codecs:
            rate = pricing.per_minute_rate((job.tier, codec, res, fps, job.region))
            lines.append(CostLine(f"{codec} {job.tier} {res} {fps}fps {job.region}", minutes, "minute", rate, minutes * rate))
    elif mode is PricingMode.COMPUTE_TIME:
        if predicted_seconds is None or job.instance_class is None:
            raise JobConfigError("compute_time pricing needs predicted_seconds and an instance class")
        hours = _decimal(predicted_seconds) / SECONDS_PER_HOUR
        rate = pricing.compute_rate(job.instance_class)
        lines.append(CostLine(job.instance_class, hours, "hour", rate, hours * rate))
    else:
        rate = pricing.reserved_rate(job.region)
        lines.append(CostLine(f"reserved slot {job.region}", Decimal(1), "month", rate, rate))

    total = sum((line.amount for line in lines), Decimal(0))
    return CostEstimate(mode=mode, total=total, currency=pricing.currency, lines=tuple(lines))
