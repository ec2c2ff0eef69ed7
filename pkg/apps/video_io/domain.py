import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from apps.core.exceptions import FrameGeometryError


class ChromaSubsampling(enum.Enum):
    C420 = "420"
    C422 = "422"
    C444 = "444"

    @property
    def factors(self) -> Tuple[int, int]:
        """(vertical, horizontal) chroma decimation."""
        return {
            ChromaSubsampling.C420: (2, 2),
            ChromaSubsampling.C422: (1, 2),
            ChromaSubsampling.C444: (1, 1),
        }[self]

    def chroma_shape(self, height: int, width: int) -> Tuple[int, int]:
        fy, fx = self.factors
        return math.ceil(height / fy), math.ceil(width / fx)


def _freeze(plane: np.ndarray) -> np.ndarray:
    plane = np.ascontiguousarray(plane, dtype=np.uint8)
    plane.flags.writeable = False
    return plane


@dataclass(frozen=True)
class VideoFrame:
    """One planar 8-bit picture: luma plus two chroma planes."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    subsampling: ChromaSubsampling = ChromaSubsampling.C420

    def __post_init__(self):
        for name in ("y", "u", "v"):
            plane = getattr(self, name)
            if plane.ndim != 2:
                raise FrameGeometryError(f"plane {name} must be 2-D, got {plane.shape}")
            object.__setattr__(self, name, _freeze(plane))
        expected = self.subsampling.chroma_shape(*self.y.shape)
        if self.u.shape != expected or self.v.shape != expected:
            raise FrameGeometryError(
                f"chroma planes {self.u.shape}/{self.v.shape} do not match "
                f"{self.subsampling.value} for luma {self.y.shape}; expected {expected}"
            )

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def planes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.u, self.v

    @classmethod
    def constant(cls, width, height, value=128, subsampling=ChromaSubsampling.C420):
        ch, cw = subsampling.chroma_shape(height, width)
        return cls(
            y=np.full((height, width), value, dtype=np.uint8),
            u=np.full((ch, cw), value, dtype=np.uint8),
            v=np.full((ch, cw), value, dtype=np.uint8),
            subsampling=subsampling,
        )

    def with_planes(self, y, u, v) -> "VideoFrame":
        return VideoFrame(y=y, u=u, v=v, subsampling=self.subsampling)


@dataclass(frozen=True)
class ClipMeta:
    """Geometry and timing of a clip without its samples."""

    width: int
    height: int
    n_frames: int
    frame_rate: Fraction
    source_id: str = ""

    @property
    def duration(self) -> float:
        return float(self.n_frames / self.frame_rate)

    @property
    def megapixel_frames(self) -> float:
        return self.width * self.height * self.n_frames / 1e6

    def resized(self, width: int, height: int) -> "ClipMeta":
        return ClipMeta(width, height, self.n_frames, self.frame_rate, self.source_id)


@dataclass(frozen=True)
class Clip:
    """Ordered frames sharing geometry, plus the Y4M header details needed to
    write them back byte-for-byte."""

    frames: Tuple[VideoFrame, ...]
    frame_rate_ratio: Tuple[int, int] = (30, 1)
    source_id: str = ""
    # Header tokens as (key letter, value) in file order, W/H/F/C refreshed on write
    header_tokens: Tuple[Tuple[str, str], ...] = ()
    frame_params: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not frames:
            raise FrameGeometryError("a clip needs at least one frame")
        num, den = self.frame_rate_ratio
        if num <= 0 or den <= 0:
            raise FrameGeometryError(f"frame rate must be positive, got {num}:{den}")
        first = frames[0]
        for index, frame in enumerate(frames[1:], start=1):
            if (frame.width, frame.height, frame.subsampling) != (
                first.width,
                first.height,
                first.subsampling,
            ):
                raise FrameGeometryError(f"frame {index} geometry differs from frame 0")
        if self.frame_params and len(self.frame_params) != len(frames):
            object.__setattr__(self, "frame_params", ())

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def subsampling(self) -> ChromaSubsampling:
        return self.frames[0].subsampling

    @property
    def frame_rate(self) -> Fraction:
        return Fraction(*self.frame_rate_ratio)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        return float(self.n_frames / self.frame_rate)

    @property
    def meta(self) -> ClipMeta:
        return ClipMeta(self.width, self.height, self.n_frames, self.frame_rate, self.source_id)

    def luma_stack(self) -> np.ndarray:
        """(frames, height, width) uint8 view of the luma planes."""
        return np.stack([frame.y for frame in self.frames])

    def plane_stack(self, index: int) -> np.ndarray:
        return np.stack([frame.planes[index] for frame in self.frames])

    def with_frames(self, frames, source_id: Optional[str] = None) -> "Clip":
        frames = tuple(frames)
        keep_params = len(frames) == len(self.frame_params)
        return Clip(
            frames=frames,
            frame_rate_ratio=self.frame_rate_ratio,
            source_id=self.source_id if source_id is None else source_id,
            header_tokens=self.header_tokens,
            frame_params=self.frame_params if keep_params else (),
        )

    @classmethod
    def from_planes(cls, y, u, v, frame_rate=(30, 1), source_id="", subsampling=ChromaSubsampling.C420):
        """Build a clip from (frames, h, w) plane stacks."""
        frames = [
            VideoFrame(y=y[i], u=u[i], v=v[i], subsampling=subsampling) for i in range(len(y))
        ]
        return cls(frames=tuple(frames), frame_rate_ratio=tuple(frame_rate), source_id=source_id)
