"""Running real encoder binaries through command templates."""

import logging
import re
import shutil
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import pandas as pd
from django.conf import settings

from apps.core.exceptions import (
    ClipforgeError,
    DecodeError,
    EncodeError,
    EncoderSpawnError,
    StatsParseError,
    Y4MFormatError,
)
from apps.metrics.domain import QualityMetric
from apps.metrics.quality import measure
from apps.video_io.domain import Clip
from apps.video_io.y4m import read_y4m

from .domain import FRAME_STAT_COLUMNS, EncodeResult, EncoderProfile, FrameStat, normalize_k
from .profiles import format_k, render_command

logger = logging.getLogger("clipforge.codec_gateway")


def scratch_dir() -> Path:
    parent = Path(settings.CLIPFORGE["TMPDIR"])
    parent.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix="clipforge-", dir=parent))


def _run(argv, error_class=EncodeError) -> Tuple[float, subprocess.CompletedProcess]:
    logger.debug(f"executing {' '.join(argv)}")
    start = time.perf_counter()
    try:
        completed = subprocess.run(argv, capture_output=True, check=False)
    except (FileNotFoundError, PermissionError) as exc:
        raise EncoderSpawnError(f"cannot start {argv[0]}: {exc}", argv) from exc
    elapsed = time.perf_counter() - start
    if completed.returncode != 0:
        stderr = completed.stderr.decode("utf-8", errors="replace")
        raise error_class(f"exited with status {completed.returncode}", argv, stderr)
    return elapsed, completed


def parse_frame_stats(path: Union[str, Path]) -> Tuple[FrameStat, ...]:
    """Read a normalized per-frame stats CSV."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise StatsParseError(f"unreadable stats file {path}: {exc}") from exc
    missing = set(FRAME_STAT_COLUMNS[:4]) - set(frame.columns)
    if missing:
        raise StatsParseError(f"stats file {path} lacks columns {sorted(missing)}")

    def optional(row, name):
        value = row.get(name)
        return None if value is None or pd.isna(value) else float(value)

    stats = []
    for row in frame.to_dict("records"):
        try:
            stats.append(
                FrameStat(
                    frame_index=int(row["frame_index"]),
                    frame_type=str(row["frame_type"]).strip().upper(),
                    bits=int(row["bits"]),
                    avg_qp=float(row["avg_qp"]),
                    q_y=optional(row, "q_y"),
                    q_u=optional(row, "q_u"),
                    q_v=optional(row, "q_v"),
                )
            )
        except (TypeError, ValueError) as exc:
            raise StatsParseError(f"bad stats row {row}: {exc}") from exc
    return tuple(sorted(stats, key=lambda s: s.frame_index))


X264_FRAME_TYPES = {"I": "I", "i": "I", "P": "P", "B": "B", "b": "B"}
X264_STATS_LINE = re.compile(
    r"in:(?P<index>\d+) out:\d+ type:(?P<type>\S).*?\bq:(?P<qp>[-\d.]+)"
    r".*?\btex:(?P<tex>\d+) mv:(?P<mv>\d+) misc:(?P<misc>\d+)"
)


def parse_x264_stats(path: Union[str, Path]) -> Tuple[FrameStat, ...]:
    """Read the per-frame lines x264 writes with --pass 1 --stats.

    Frame bits are texture + motion vector + misc bits; frames come back in
    display order.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise StatsParseError(f"unreadable stats file {path}: {exc}") from exc

    stats = []
    for line in lines:
        if not line.strip() or line.startswith("#"):
            continue
        match = X264_STATS_LINE.search(line)
        if match is None or match["type"] not in X264_FRAME_TYPES:
            raise StatsParseError(f"bad x264 stats line {line!r}")
        stats.append(
            FrameStat(
                frame_index=int(match["index"]),
                frame_type=X264_FRAME_TYPES[match["type"]],
                bits=int(match["tex"]) + int(match["mv"]) + int(match["misc"]),
                avg_qp=float(match["qp"]),
            )
        )
    if not stats:
        raise StatsParseError(f"stats file {path} has no frames")
    return tuple(sorted(stats, key=lambda s: s.frame_index))


STATS_PARSERS = {"csv": parse_frame_stats, "x264": parse_x264_stats}


def _decode(profile: EncoderProfile, encoded: Path, workdir: Path) -> Optional[Clip]:
    if profile.decode_command_template:
        decoded = workdir / "decoded.y4m"
        argv = render_command(
            profile.decode_command_template, {"INPUT": encoded, "OUTPUT": decoded}
        )
        _run(argv, error_class=DecodeError)
    elif profile.output_suffix.lower() == ".y4m":
        decoded = encoded
    else:
        return None
    try:
        return read_y4m(decoded)
    except (OSError, Y4MFormatError) as exc:
        raise DecodeError(f"decoded output is not valid Y4M: {exc}") from exc


def run_external_encode(
    profile: EncoderProfile,
    clip_path: Union[str, Path],
    qp: float,
    preset: Optional[str] = None,
    k_vector: Optional[Sequence[float]] = None,
    source: Optional[Clip] = None,
    metric=QualityMetric.PSNR,
    bitrate_kbps: Optional[float] = None,
) -> EncodeResult:
    """Encode one clip at one QP, decode it back and measure it.

    Only the encoder process is timed. Scratch files are removed on success
    and kept (path logged) on failure.
    """
    clip_path = Path(clip_path)
    source = source if source is not None else read_y4m(clip_path)
    preset = preset or profile.preset or profile.default_preset or ""
    k = normalize_k(k_vector, max(len(profile.frame_groups), 1))

    workdir = scratch_dir()
    encoded = workdir / f"encoded{profile.output_suffix}"
    stats_path = workdir / f"stats.{profile.stats_format}"
    values = {
        "INPUT": clip_path,
        "OUTPUT": encoded,
        "QP": f"{qp:g}",
        "PRESET": preset,
        "K1": format_k(k[0]),
        "K2": format_k(k[1] if len(k) > 1 else 1.0),
        "STATS": stats_path,
        "BITRATE": "" if bitrate_kbps is None else f"{bitrate_kbps:g}",
    }
    argv = render_command(profile.command_template, values)

    try:
        elapsed, _ = _run(argv)
        if not encoded.exists() or encoded.stat().st_size == 0:
            raise EncodeError("encoder produced no output", argv)
        bits = encoded.stat().st_size * 8
        bitrate = bits / source.duration / 1000.0

        decoded = _decode(profile, encoded, workdir)
        quality = None
        if decoded is not None:
            try:
                quality = measure(metric, source, decoded)
            except ClipforgeError as exc:
                raise DecodeError(f"decoded clip does not match the source: {exc}") from exc

        stats = None
        flags = []
        if "{STATS}" in profile.command_template:
            try:
                stats = STATS_PARSERS[profile.stats_format](stats_path)
            except StatsParseError as exc:
                logger.warning(f"per-frame stats unavailable for {clip_path.name} qp={qp}: {exc}")
                flags.append("stats_missing")
    except ClipforgeError:
        logger.warning(f"encode failed, scratch kept at {workdir}")
        raise

    shutil.rmtree(workdir, ignore_errors=True)
    return EncodeResult(
        bitrate_kbps=bitrate,
        wall_time=max(elapsed, 1e-9),
        qp=qp,
        preset=preset or None,
        k_vector=k,
        quality=quality,
        output_clip=decoded,
        per_frame_stats=stats,
        flags=tuple(flags),
    )

