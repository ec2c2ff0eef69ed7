"""YUV4MPEG2 reading and writing.

Header tokens and per-frame FRAME parameters are carried on the Clip so that
write_y4m(parse_y4m(data)) == data for every supported input.
"""

import io
import logging
import os
import tempfile
from pathlib import Path
from typing import BinaryIO, List, Tuple, Union

import numpy as np

from apps.core.exceptions import Y4MFormatError

from .domain import ChromaSubsampling, Clip, VideoFrame

logger = logging.getLogger("clipforge.video_io")

SIGNATURE = b"YUV4MPEG2"
FRAME_TAG = b"FRAME"

# Y4M colorspace tags accepted for 8-bit planar input
_COLORSPACES = {
    "420": ChromaSubsampling.C420,
    "420jpeg": ChromaSubsampling.C420,
    "420mpeg2": ChromaSubsampling.C420,
    "420paldv": ChromaSubsampling.C420,
    "422": ChromaSubsampling.C422,
    "444": ChromaSubsampling.C444,
}


def _read_line(stream: BinaryIO, limit: int = 4096) -> bytes:
    line = stream.readline(limit)
    if line and not line.endswith(b"\n"):
        return line + b"\x00"  # marks an unterminated line
    return line


def _parse_header(line: bytes) -> Tuple[Tuple[Tuple[str, str], ...], int, int, Tuple[int, int], ChromaSubsampling]:
    if not line.startswith(SIGNATURE + b" ") and line.rstrip(b"\n") != SIGNATURE:
        raise Y4MFormatError("missing YUV4MPEG2 signature")
    if not line.endswith(b"\n"):
        raise Y4MFormatError("unterminated Y4M header")

    try:
        text = line[len(SIGNATURE):-1].decode("ascii")
    except UnicodeDecodeError as exc:
        raise Y4MFormatError("Y4M header is not ASCII") from exc

    tokens = tuple((tok[0], tok[1:]) for tok in text.split(" ") if tok)
    fields = {}
    for key, value in tokens:
        fields.setdefault(key, value)

    try:
        width = int(fields["W"])
        height = int(fields["H"])
    except (KeyError, ValueError) as exc:
        raise Y4MFormatError("Y4M header needs integer W and H") from exc
    if width <= 0 or height <= 0:
        raise Y4MFormatError(f"invalid frame size {width}x{height}")

    rate = fields.get("F", "30:1")
    try:
        num, den = (int(part) for part in rate.split(":"))
    except ValueError as exc:
        raise Y4MFormatError(f"invalid frame rate token F{rate}") from exc
    if num <= 0 or den <= 0:
        raise Y4MFormatError(f"invalid frame rate token F{rate}")

    colorspace = fields.get("C", "420")
    if colorspace not in _COLORSPACES:
        raise Y4MFormatError(f"unsupported colorspace C{colorspace}")

    return tokens, width, height, (num, den), _COLORSPACES[colorspace]


def parse_y4m(data: Union[bytes, BinaryIO], source_id: str = "") -> Clip:
    """Decode a Y4M byte string or binary stream into a Clip."""
    stream = io.BytesIO(data) if isinstance(data, (bytes, bytearray)) else data

    tokens, width, height, frame_rate, subsampling = _parse_header(_read_line(stream))
    ch, cw = subsampling.chroma_shape(height, width)
    luma_size = width * height
    chroma_size = ch * cw
    frame_size = luma_size + 2 * chroma_size

    frames: List[VideoFrame] = []
    params: List[str] = []
    while True:
        marker = _read_line(stream)
        if not marker:
            break
        index = len(frames)
        if not (marker.startswith(FRAME_TAG + b" ") or marker == FRAME_TAG + b"\n"):
            raise Y4MFormatError("expected FRAME marker", frame_index=index)
        if not marker.endswith(b"\n"):
            raise Y4MFormatError("unterminated FRAME marker", frame_index=index)
        params.append(marker[len(FRAME_TAG):-1].decode("ascii", errors="strict"))

        payload = stream.read(frame_size)
        if len(payload) != frame_size:
            raise Y4MFormatError(
                f"truncated frame payload: {len(payload)} of {frame_size} bytes",
                frame_index=index,
            )
        buf = np.frombuffer(payload, dtype=np.uint8)
        frames.append(
            VideoFrame(
                y=buf[:luma_size].reshape(height, width),
                u=buf[luma_size:luma_size + chroma_size].reshape(ch, cw),
                v=buf[luma_size + chroma_size:].reshape(ch, cw),
                subsampling=subsampling,
            )
        )

    if not frames:
        raise Y4MFormatError("Y4M stream contains no frames")

    logger.debug(f"parsed {source_id or '<stream>'}: {width}x{height}, {len(frames)} frames")
    return Clip(
        frames=tuple(frames),
        frame_rate_ratio=frame_rate,
        source_id=source_id,
        header_tokens=tokens,
        frame_params=tuple(params),
    )


def _header_bytes(clip: Clip) -> bytes:
    live = {
        "W": str(clip.width),
        "H": str(clip.height),
        "F": f"{clip.frame_rate_ratio[0]}:{clip.frame_rate_ratio[1]}",
    }
    tokens = list(clip.header_tokens) or [("W", ""), ("H", ""), ("F", ""), ("I", "p"), ("A", "1:1")]
    original_c = next((value for key, value in tokens if key == "C"), None)
    if original_c is None or _COLORSPACES.get(original_c) is not clip.subsampling:
        c_value = clip.subsampling.value
    else:
        c_value = original_c
    if clip.subsampling is not ChromaSubsampling.C420 or original_c is not None:
        live["C"] = c_value

    out, seen = [], set()
    for key, value in tokens:
        if key in live and key not in seen:
            value = live[key]
            seen.add(key)
        out.append(f"{key}{value}")
    for key in ("W", "H", "F", "C"):
        if key in live and key not in seen:
            out.append(f"{key}{live[key]}")
    return SIGNATURE + b" " + " ".join(out).encode("ascii") + b"\n"


def write_y4m(clip: Clip, stream: BinaryIO = None) -> bytes:
    """Encode a Clip as Y4M bytes; also written to `stream` when given."""
    chunks = [_header_bytes(clip)]
    params = clip.frame_params or ("",) * clip.n_frames
    for frame, param in zip(clip.frames, params):
        chunks.append(FRAME_TAG + param.encode("ascii") + b"\n")
        chunks.extend(plane.tobytes() for plane in frame.planes)
    data = b"".join(chunks)
    if stream is not None:
        stream.write(data)
    return data


def read_y4m(path: Union[str, Path]) -> Clip:
    path = Path(path)
    with path.open("rb") as handle:
        return parse_y4m(handle, source_id=path.stem)


def write_y4m_file(path: Union[str, Path], clip: Clip) -> Path:
    """Write atomically: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            write_y4m(clip, handle)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
