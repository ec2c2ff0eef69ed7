import io

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.core.exceptions import FrameGeometryError, Y4MFormatError
from apps.metrics.quality import psnr
from apps.video_io.domain import ChromaSubsampling, Clip, VideoFrame
from apps.video_io.noise import add_gaussian_noise, mean_brightness, sigma_for_target_psnr
from apps.video_io.patterns import textured_clip
from apps.video_io.resample import downsample_half, proxy_resolution, resize_to_proxy
from apps.video_io.y4m import parse_y4m, read_y4m, write_y4m, write_y4m_file
from tests.factories import ClipFactory, ConstantClipFactory

TINY = b"YUV4MPEG2 W4 H4 F30:1 C420\nFRAME\n" + b"\x80" * 24


class Y4MParseTests(SimpleTestCase):
    def test_parse_minimal_stream(self):
        clip = parse_y4m(TINY)
        self.assertEqual((clip.width, clip.height, clip.n_frames), (4, 4, 1))
        self.assertEqual(clip.frame_rate, 30)
        for plane in clip.frames[0].planes:
            self.assertTrue(np.all(plane == 128))

    def test_minimal_stream_writes_back_identically(self):
        self.assertEqual(write_y4m(parse_y4m(TINY)), TINY)

    def test_unknown_tokens_and_frame_params_survive(self):
        data = (
            b"YUV4MPEG2 W4 H2 F25:1 Ip A1:1 C420jpeg XYSCSS=420JPEG\n"
            + b"FRAME Ixyz\n" + b"\x10" * 12
            + b"FRAME\n" + b"\x20" * 12
        )
        clip = parse_y4m(data)
        self.assertEqual(clip.subsampling, ChromaSubsampling.C420)
        self.assertEqual(write_y4m(clip), data)

    def test_truncated_payload_names_the_frame(self):
        data = TINY + b"FRAME\n" + b"\x80" * 10
        with self.assertRaises(Y4MFormatError) as ctx:
            parse_y4m(data)
        self.assertEqual(ctx.exception.frame_index, 1)

    def test_missing_signature(self):
        with self.assertRaises(Y4MFormatError):
            parse_y4m(b"YUV4MPEG W4 H4\nFRAME\n" + b"\x00" * 24)

    def test_high_bit_depth_is_rejected(self):
        with self.assertRaises(Y4MFormatError):
            parse_y4m(b"YUV4MPEG2 W4 H4 F30:1 C420p10\nFRAME\n" + b"\x00" * 48)

    def test_empty_stream_is_rejected(self):
        with self.assertRaises(Y4MFormatError):
            parse_y4m(b"YUV4MPEG2 W4 H4 F30:1\n")

    def test_stream_input(self):
        clip = parse_y4m(io.BytesIO(TINY), source_id="tiny")
        self.assertEqual(clip.source_id, "tiny")


@pytest.mark.parametrize("seed", range(100))
def test_random_clip_round_trip_is_byte_identical(seed):
    width, height = 2 * np.random.default_rng(seed).integers(4, 33, size=2)
    subsampling = list(ChromaSubsampling)[seed % len(ChromaSubsampling)]
    clip = ClipFactory(width=int(width), height=int(height), n_frames=10, seed=seed, subsampling=subsampling)
    data = write_y4m(clip)
    assert write_y4m(parse_y4m(data)) == data


@pytest.mark.parametrize("subsampling", list(ChromaSubsampling))
def test_round_trip_for_each_subsampling(subsampling):
    clip = ClipFactory(width=18, height=10, n_frames=2, subsampling=subsampling)
    data = write_y4m(clip)
    again = parse_y4m(data)
    assert again.subsampling is subsampling
    assert write_y4m(again) == data


def test_repeated_writes_are_identical():
    clip = ConstantClipFactory(width=8, height=8, n_frames=1)
    assert write_y4m(clip) == write_y4m(clip)


def test_file_helpers(tmp_path):
    clip = ClipFactory(width=16, height=16, n_frames=3)
    path = write_y4m_file(tmp_path / "nested" / "a.y4m", clip)
    loaded = read_y4m(path)
    assert loaded.source_id == "a"
    assert write_y4m(loaded) == write_y4m(clip)
    assert [p.name for p in path.parent.iterdir()] == ["a.y4m"]


class ClipGeometryTests(SimpleTestCase):
    def test_chroma_shape_must_match(self):
        with self.assertRaises(FrameGeometryError):
            VideoFrame(
                y=np.zeros((4, 4), np.uint8),
                u=np.zeros((4, 4), np.uint8),
                v=np.zeros((2, 2), np.uint8),
            )

    def test_frames_must_share_geometry(self):
        with self.assertRaises(FrameGeometryError):
            Clip(frames=(VideoFrame.constant(4, 4), VideoFrame.constant(8, 8)))

    def test_clip_needs_frames(self):
        with self.assertRaises(FrameGeometryError):
            Clip(frames=())

    def test_planes_are_read_only(self):
        frame = VideoFrame.constant(4, 4)
        with self.assertRaises(ValueError):
            frame.y[0, 0] = 1


class NoiseTests(SimpleTestCase):
    def test_sigma_mapping(self):
        self.assertAlmostEqual(sigma_for_target_psnr(20.0), 25.5)
        with self.assertRaises(ValueError):
            sigma_for_target_psnr(0)

    def test_zero_sigma_returns_the_clip(self):
        clip = ConstantClipFactory()
        self.assertIs(add_gaussian_noise(clip, 0.0, seed=3), clip)

    def test_negative_sigma(self):
        with self.assertRaises(ValueError):
            add_gaussian_noise(ConstantClipFactory(), -1.0, seed=0)

    def test_same_seed_same_noise(self):
        clip = ConstantClipFactory()
        a = add_gaussian_noise(clip, 5.0, seed=7)
        b = add_gaussian_noise(clip, 5.0, seed=7)
        c = add_gaussian_noise(clip, 5.0, seed=8)
        self.assertEqual(write_y4m(a), write_y4m(b))
        self.assertNotEqual(write_y4m(a), write_y4m(c))

    def test_mean_brightness(self):
        self.assertEqual(mean_brightness(ConstantClipFactory(value=128)), 128.0)
        clip = ClipFactory(width=16, height=16, n_frames=3, seed=11)
        self.assertAlmostEqual(mean_brightness(clip), float(clip.luma_stack().astype(np.float64).mean()), places=9)


@pytest.mark.parametrize("target", [20.0, 25.0, 27.5, 30.0, 40.0])
def test_noise_hits_target_psnr(mid_gray_clip, target):
    noisy = add_gaussian_noise(mid_gray_clip, sigma_for_target_psnr(target), seed=42)
    assert abs(psnr(mid_gray_clip, noisy) - target) <= 0.3


class ResampleTests(SimpleTestCase):
    def test_proxy_resolution(self):
        self.assertEqual(proxy_resolution(1920, 1080), (256, 144))
        self.assertEqual(proxy_resolution(3840, 2160), (256, 144))
        self.assertEqual(proxy_resolution(1280, 720), (256, 144))
        self.assertEqual(proxy_resolution(640, 360), (256, 144))
        self.assertEqual(proxy_resolution(176, 144), (176, 144))
        self.assertEqual(proxy_resolution(256, 128), (256, 128))

    def test_proxy_resolution_is_a_fixed_point(self):
        for size in [(3840, 2160), (1920, 1080), (2560, 1440), (1280, 720), (854, 480), (256, 144), (176, 144)]:
            with self.subTest(size=size):
                once = proxy_resolution(*size)
                self.assertEqual(proxy_resolution(*once), once)

    def test_proxy_resolution_rejects_degenerate_sizes(self):
        with self.assertRaises(FrameGeometryError):
            proxy_resolution(8, 8)

    def test_proxy_of_proxy_is_identity(self):
        clip = ClipFactory(width=256, height=144, n_frames=2)
        self.assertIs(resize_to_proxy(clip), clip)

    def test_resize_to_proxy(self):
        clip = textured_clip(width=320, height=180, n_frames=2)
        proxy = resize_to_proxy(clip)
        self.assertEqual((proxy.width, proxy.height, proxy.n_frames), (256, 144, 2))

    def test_downsample_half_averages_blocks(self):
        y = np.array([[0, 2, 10, 10], [2, 4, 10, 11], [7, 7, 0, 0], [7, 7, 0, 1]], dtype=np.uint8)
        frame = VideoFrame(y=y, u=np.full((2, 2), 50, np.uint8), v=np.full((2, 2), 60, np.uint8))
        half = downsample_half(frame)
        np.testing.assert_array_equal(half.y, [[2, 10], [7, 0]])
        self.assertEqual(half.u.shape, (1, 1))
        self.assertEqual(int(half.u[0, 0]), 50)

    def test_downsample_crops_odd_edge(self):
        frame = VideoFrame.constant(5, 5, value=90)
        half = downsample_half(frame)
        self.assertEqual((half.width, half.height), (2, 2))
        self.assertTrue(np.all(half.y == 90))
