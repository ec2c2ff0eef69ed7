import logging
from typing import Tuple

import numpy as np
from scipy import ndimage

from apps.core.exceptions import FrameGeometryError

from .domain import Clip, VideoFrame

logger = logging.getLogger("clipforge.video_io")

PROXY_HEIGHT = 144
PROXY_THRESHOLD_HEIGHT = 720
MIN_DIMENSION = 16


def _round_even(value: float) -> int:
    return max(2, int(np.floor(value / 2.0 + 0.5)) * 2)


def _proxy_step(width: int, height: int) -> Tuple[int, int]:
    if height <= PROXY_THRESHOLD_HEIGHT:
        target_h = min(height, PROXY_HEIGHT)
        if target_h == height:
            return _round_even(width), _round_even(height)
        return _round_even(width * target_h / height), _round_even(target_h)
    return _round_even(width / 2), _round_even(height / 2)


def proxy_resolution(width: int, height: int) -> Tuple[int, int]:
    """Target size of the low-resolution proxy used to speed up the k search.

    Sources up to 720 lines go to 144 lines with the aspect ratio kept (never
    upscaled); taller sources are halved first. The rule is applied until the
    size stops changing, so every output is its own proxy. Widths and heights
    are rounded to even.
    """
    if width < MIN_DIMENSION or height < MIN_DIMENSION:
        raise FrameGeometryError(f"degenerate dimensions {width}x{height} for a proxy")
    size = (width, height)
    while True:
        step = _proxy_step(*size)
        if step == size:
            return size
        size = step


def _halve_plane(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    src = plane.astype(np.uint16)
    need_h, need_w = 2 * out_h, 2 * out_w
    # crop trailing rows/cols, or replicate the edge when a ceil'd chroma plane is short
    src = src[:need_h, :need_w]
    pad_h, pad_w = need_h - src.shape[0], need_w - src.shape[1]
    if pad_h or pad_w:
        src = np.pad(src, ((0, pad_h), (0, pad_w)), mode="edge")
    total = src[0::2, 0::2] + src[0::2, 1::2] + src[1::2, 0::2] + src[1::2, 1::2]
    return ((total + 2) // 4).astype(np.uint8)


def downsample_half(frame: VideoFrame) -> VideoFrame:
    """Halve a frame by averaging 2x2 blocks, rounding to nearest.

    An odd trailing luma row or column is cropped first.
    """
    if frame.width < 2 or frame.height < 2:
        raise FrameGeometryError(f"cannot halve a {frame.width}x{frame.height} frame")
    out_h, out_w = frame.height // 2, frame.width // 2
    ch, cw = frame.subsampling.chroma_shape(out_h, out_w)
    return frame.with_planes(
        _halve_plane(frame.y, out_h, out_w),
        _halve_plane(frame.u, ch, cw),
        _halve_plane(frame.v, ch, cw),
    )


def _resize_plane(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    if plane.shape == (out_h, out_w):
        return plane
    zoom = (out_h / plane.shape[0], out_w / plane.shape[1])
    resized = ndimage.zoom(plane.astype(np.float64), zoom, order=1, mode="nearest", grid_mode=True)
    resized = resized[:out_h, :out_w]
    if resized.shape != (out_h, out_w):
        resized = np.pad(
            resized,
            ((0, out_h - resized.shape[0]), (0, out_w - resized.shape[1])),
            mode="edge",
        )
    return np.clip(np.floor(resized + 0.5), 0, 255).astype(np.uint8)


def resize_frame(frame: VideoFrame, width: int, height: int) -> VideoFrame:
    """Box-halve while the frame is at least twice the target, then linear-resample."""
    while frame.width >= 2 * width and frame.height >= 2 * height:
        frame = downsample_half(frame)
    if (frame.width, frame.height) == (width, height):
        return frame
    ch, cw = frame.subsampling.chroma_shape(height, width)
    return frame.with_planes(
        _resize_plane(frame.y, height, width),
        _resize_plane(frame.u, ch, cw),
        _resize_plane(frame.v, ch, cw),
    )


def resize_to_proxy(clip: Clip) -> Clip:
    width, height = proxy_resolution(clip.width, clip.height)
    if (width, height) == (clip.width, clip.height):
        return clip
    logger.debug(f"resizing {clip.source_id} from {clip.width}x{clip.height} to proxy {width}x{height}")
    return clip.with_frames(resize_frame(frame, width, height) for frame in clip.frames)
