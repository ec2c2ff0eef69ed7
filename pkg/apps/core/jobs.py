"""Batch job configuration files."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from django.conf import settings

from .exceptions import JobConfigError

KNOWN_KEYS = {
    "schema_version",
    "profiles",
    "lambda_search",
    "sweep_grid",
    "predictor",
    "time_model",
    "pricing",
    "workers",
    "seed",
    "output_dir",
}


@dataclass(frozen=True)
class JobConfig:
    profiles: Tuple[str, ...] = ()
    lambda_search: Dict[str, Any] = field(default_factory=dict)
    sweep_grid: Dict[str, Any] = field(default_factory=dict)
    predictor: Dict[str, Any] = field(default_factory=dict)
    time_model: Dict[str, Any] = field(default_factory=dict)
    pricing: Optional[str] = None
    workers: int = 1
    seed: int = 0
    output_dir: str = ""

    def __post_init__(self):
        if self.workers < 1:
            raise JobConfigError(f"workers must be >= 1, got {self.workers}")
        unknown = [p for p in self.profiles if p not in settings.ENCODER_PROFILES]
        if unknown:
            raise JobConfigError(f"unknown encoder profiles {unknown}; available: {sorted(settings.ENCODER_PROFILES)}")

    @classmethod
    def defaults(cls) -> "JobConfig":
        return cls(
            workers=settings.CLIPFORGE["WORKERS"],
            seed=settings.CLIPFORGE["DEFAULT_SEED"],
            output_dir=str(settings.CLIPFORGE["OUTPUT_DIR"]),
        )

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "JobConfig":
        version = payload.get("schema_version", settings.CLIPFORGE["SCHEMA_VERSION"])
        if version != settings.CLIPFORGE["SCHEMA_VERSION"]:
            raise JobConfigError(f"job config schema_version {version} is not supported")
        unknown = set(payload) - KNOWN_KEYS
        if unknown:
            raise JobConfigError(f"unknown job config keys {sorted(unknown)}")
        base = asdict(cls.defaults())
        base.update({k: v for k, v in payload.items() if k != "schema_version"})
        base["profiles"] = tuple(base["profiles"])
        try:
            base["workers"] = int(base["workers"])
            base["seed"] = int(base["seed"])
        except (TypeError, ValueError) as exc:
            raise JobConfigError(f"workers and seed must be integers: {exc}") from exc
        return cls(**base)

    @classmethod
    def load(cls, path) -> "JobConfig":
        try:
            payload = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise JobConfigError(f"cannot read job config {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise JobConfigError(f"job config {path} must be a JSON object")
        return cls.from_dict(payload)

    def override(self, **values) -> "JobConfig":
        """Command-line flags win over the file; None means 'not given'."""
        current = asdict(self)
        current.update({k: v for k, v in values.items() if v is not None})
        current["profiles"] = tuple(current["profiles"])
        return JobConfig(**current)

    def snapshot(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["profiles"] = list(self.profiles)
        return payload
