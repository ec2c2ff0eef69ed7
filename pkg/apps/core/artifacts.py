"""Artifact files: atomic writes, schema-versioned JSON, CSV twins, manifests."""

import base64
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import joblib
import pandas as pd
from django.conf import settings
from django.utils import timezone

from .exceptions import SchemaMismatchError

logger = logging.getLogger("clipforge.core")

PathLike = Union[str, Path]


def schema_version() -> int:
    return settings.CLIPFORGE["SCHEMA_VERSION"]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write to a temp file in the target directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def dumps_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    payload = dict(payload)
    payload.setdefault("schema_version", schema_version())
    return atomic_write_bytes(path, dumps_json(payload).encode("utf-8"))


def read_json(path: PathLike, expected_kind: Optional[str] = None) -> Dict[str, Any]:
    payload = json.loads(Path(path).read_text())
    version = payload.get("schema_version")
    if version != schema_version():
        raise SchemaMismatchError(f"{path}: schema_version {version}, expected {schema_version()}")
    if expected_kind and payload.get("kind") != expected_kind:
        raise SchemaMismatchError(f"{path}: kind {payload.get('kind')!r}, expected {expected_kind!r}")
    return payload


def write_csv(path: PathLike, frame: Union[pd.DataFrame, List[Dict[str, Any]]], columns: Optional[List[str]] = None) -> Path:
    if not isinstance(frame, pd.DataFrame):
        frame = pd.DataFrame(frame, columns=columns)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n", float_format="%.10g")
    return atomic_write_bytes(path, buffer.getvalue().encode("utf-8"))


def encode_estimator(estimator) -> str:
    buffer = io.BytesIO()
    joblib.dump(estimator, buffer)
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def decode_estimator(blob: str):
    return joblib.load(io.BytesIO(base64.b64decode(blob.encode("ascii"))))


@dataclass
class RunManifest:
    """List of every file a command produced; written last."""

    command: str
    output_dir: Path
    seed: Optional[int] = None
    config: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    failures: List[Dict[str, str]] = field(default_factory=list)

    def add(self, path: PathLike) -> Path:
        path = Path(path)
        try:
            self.files.append(str(path.relative_to(self.output_dir)))
        except ValueError:
            self.files.append(str(path))
        return path

    def fail(self, item: str, error: Exception):
        self.failures.append({"item": item, "error": str(error)})

    def write(self, elapsed_seconds: Optional[float] = None) -> Path:
        payload = {
            "kind": "run_manifest",
            "command": self.command,
            "tool_version": settings.CLIPFORGE["TOOL_VERSION"],
            "seed": self.seed,
            "config": self.config,
            "files": sorted(self.files),
            "failures": self.failures,
            "finished_at": timezone.now().isoformat(),
            "elapsed_seconds": elapsed_seconds,
        }
        path = write_json(Path(self.output_dir) / "manifest.json", payload)
        logger.info(f"{self.command}: wrote {len(self.files)} files to {self.output_dir}")
        return path
