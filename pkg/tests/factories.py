import factory
import numpy as np

from apps.codec_gateway.domain import FrameStat
from apps.load_predict.complexity import ComplexityFeatures, TimeSample
from apps.video_io.domain import ChromaSubsampling, Clip, VideoFrame


def _random_frames(width, height, n_frames, seed, subsampling=ChromaSubsampling.C420):
    rng = np.random.default_rng(seed)
    ch, cw = subsampling.chroma_shape(height, width)
    return tuple(
        VideoFrame(
            y=rng.integers(0, 256, size=(height, width), dtype=np.uint8),
            u=rng.integers(0, 256, size=(ch, cw), dtype=np.uint8),
            v=rng.integers(0, 256, size=(ch, cw), dtype=np.uint8),
            subsampling=subsampling,
        )
        for _ in range(n_frames)
    )


class ClipFactory(factory.Factory):
    """Seeded random 8-bit clip."""

    class Meta:
        model = Clip

    class Params:
        width = 64
        height = 64
        n_frames = 4
        seed = factory.Sequence(lambda n: n)
        subsampling = ChromaSubsampling.C420

    frames = factory.LazyAttribute(lambda o: _random_frames(o.width, o.height, o.n_frames, o.seed, o.subsampling))
    frame_rate_ratio = (30, 1)
    source_id = factory.Sequence(lambda n: f"clip{n:03d}")


class ConstantClipFactory(factory.Factory):
    class Meta:
        model = Clip

    class Params:
        width = 64
        height = 64
        n_frames = 4
        value = 128

    frames = factory.LazyAttribute(
        lambda o: tuple(VideoFrame.constant(o.width, o.height, o.value) for _ in range(o.n_frames))
    )
    frame_rate_ratio = (30, 1)
    source_id = factory.Sequence(lambda n: f"flat{n:03d}")


class FrameStatFactory(factory.Factory):
    class Meta:
        model = FrameStat

    frame_index = factory.Sequence(lambda n: n)
    frame_type = factory.Iterator(["I", "P", "B", "B"])
    bits = factory.Sequence(lambda n: 4000 + 100 * (n % 7))
    avg_qp = 32.0
    q_y = 38.0
    q_u = 41.0
    q_v = 41.5


class ComplexityFeaturesFactory(factory.Factory):
    class Meta:
        model = ComplexityFeatures

    height = 1080.0
    total_pixels = 1920.0 * 1080.0
    frame_rate = 30.0
    n_frames = 300.0
    se_mean = 12.0
    se_max = 30.0
    se_median = 11.0
    se_std = 4.0
    te_mean = 2.0
    te_max = 6.0
    te_median = 1.5
    te_std = 1.0
    mean_brightness = 110.0
    preset = 4.0
    target_crf = 23.0


class TimeSampleFactory(factory.Factory):
    class Meta:
        model = TimeSample

    features = factory.SubFactory(ComplexityFeaturesFactory)
    measured_seconds = 12.5
    source_id = factory.Sequence(lambda n: f"src{n % 5:03d}")
