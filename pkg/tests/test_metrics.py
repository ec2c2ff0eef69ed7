import math

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.core.exceptions import CurveOverlapError, CurveValidationError, FrameGeometryError
from apps.metrics.bjontegaard import bd_rate, quality_overlap
from apps.metrics.domain import QualityMetric, RDCurve, RDPoint, build_rd_curve
from apps.metrics.quality import PSNR_CAP, ms_ssim, plane_psnr, psnr
from apps.metrics.serializers import curve_from_dict, curve_to_dict, curve_to_frame, load_rd_curve
from apps.video_io.noise import add_gaussian_noise
from apps.video_io.patterns import textured_clip
from tests.factories import ClipFactory, ConstantClipFactory


def linear_curve(intercept, slope, qualities, metric=QualityMetric.PSNR):
    """Curve whose ln(rate) is exactly intercept + slope * quality."""
    return RDCurve(tuple(RDPoint(math.exp(intercept + slope * q), q) for q in qualities), metric)


REFERENCE = build_rd_curve([(100, 30.0), (200, 33.0), (400, 36.0), (800, 39.0)])


class BuildCurveTests(SimpleTestCase):
    def test_samples_are_sorted(self):
        curve = build_rd_curve([(800, 39.0), (100, 30.0), (400, 36.0), (200, 33.0)])
        self.assertEqual(curve.rates, (100.0, 200.0, 400.0, 800.0))

    def test_too_few_points(self):
        with self.assertRaises(CurveValidationError):
            build_rd_curve([(100, 30.0), (200, 33.0), (400, 36.0)])

    def test_duplicate_rate_names_the_row(self):
        with self.assertRaises(CurveValidationError) as ctx:
            build_rd_curve([(100, 30.0), (200, 33.0), (200, 34.0), (800, 39.0)], source="a.csv")
        self.assertIn("a.csv", str(ctx.exception))

    def test_small_inversion_is_averaged(self):
        curve = build_rd_curve([(100, 30.0), (200, 33.02), (400, 33.0), (800, 39.0)])
        self.assertAlmostEqual(curve.qualities[1], 33.01)
        self.assertAlmostEqual(curve.qualities[2], 33.01)

    def test_large_inversion_is_rejected(self):
        with self.assertRaises(CurveValidationError) as ctx:
            build_rd_curve([(100, 30.0), (200, 34.0), (400, 33.0), (800, 39.0)])
        self.assertEqual(ctx.exception.row, 3)

    def test_non_positive_rate(self):
        with self.assertRaises(CurveValidationError):
            build_rd_curve([(0, 30.0), (200, 33.0), (400, 36.0), (800, 39.0)])


class BDRateTests(SimpleTestCase):
    def test_identical_curves(self):
        self.assertEqual(bd_rate(REFERENCE, REFERENCE), 0.0)

    def test_uniform_rate_scaling(self):
        self.assertAlmostEqual(bd_rate(REFERENCE.scaled(0.8), REFERENCE), -20.0, delta=1e-9)
        self.assertAlmostEqual(bd_rate(REFERENCE.scaled(1.5), REFERENCE), 50.0, delta=1e-9)

    def test_reciprocity(self):
        test = build_rd_curve([(90, 30.5), (170, 33.4), (390, 36.8), (700, 39.5)])
        forward = 1 + bd_rate(test, REFERENCE) / 100
        backward = 1 + bd_rate(REFERENCE, test) / 100
        self.assertAlmostEqual(forward * backward, 1.0, delta=1e-9)

    def test_scaling_both_curves_leaves_bd_rate_unchanged(self):
        test = build_rd_curve([(90, 30.5), (170, 33.4), (390, 36.8), (700, 39.5)])
        expected = bd_rate(test, REFERENCE)
        for factor in (0.01, 3.0, 1000.0):
            with self.subTest(factor=factor):
                self.assertAlmostEqual(bd_rate(test.scaled(factor), REFERENCE.scaled(factor)), expected, delta=1e-9)

    def test_disjoint_curves(self):
        high = build_rd_curve([(100, 40.0), (200, 41.0), (400, 42.0), (800, 43.0)])
        with self.assertRaises(CurveOverlapError):
            bd_rate(high, REFERENCE)

    def test_metric_mismatch(self):
        other = RDCurve(REFERENCE.points, QualityMetric.MS_SSIM)
        with self.assertRaises(CurveValidationError):
            bd_rate(other, REFERENCE)

    def test_overlap_interval(self):
        test = build_rd_curve([(100, 31.0), (200, 34.0), (400, 37.0), (800, 40.0)])
        self.assertEqual(quality_overlap(test, REFERENCE), (31.0, 39.0))


def test_bd_rate_matches_closed_form_on_random_linear_curves(rng):
    for _ in range(50):
        qualities = np.sort(rng.uniform(25.0, 45.0, size=int(rng.integers(4, 8))))
        qualities = np.unique(np.round(qualities, 3))
        if len(qualities) < 4:
            continue
        a1, a2 = rng.uniform(-2.0, 2.0, size=2)
        b1, b2 = rng.uniform(0.1, 0.4, size=2)
        test = linear_curve(a1, b1, qualities)
        reference = linear_curve(a2, b2, qualities)
        low, high = qualities[0], qualities[-1]
        expected = 100.0 * math.expm1((a1 - a2) + (b1 - b2) * (low + high) / 2.0)
        got = bd_rate(test, reference)
        assert got == pytest.approx(expected, rel=1e-6, abs=1e-9)


def test_bd_rate_agrees_with_dense_trapezoid_oracle(rng):
    from scipy.interpolate import PchipInterpolator

    for _ in range(20):
        qualities = np.linspace(30.0, 40.0, 5)
        rates_t = np.exp(np.cumsum(rng.uniform(0.3, 1.0, size=5)) + 4.0)
        rates_r = np.exp(np.cumsum(rng.uniform(0.3, 1.0, size=5)) + 4.0)
        test = build_rd_curve(zip(rates_t, qualities))
        reference = build_rd_curve(zip(rates_r, qualities))
        grid = np.linspace(30.0, 40.0, 200001)
        diff = PchipInterpolator(qualities, np.log(rates_t))(grid) - PchipInterpolator(qualities, np.log(rates_r))(grid)
        oracle = 100.0 * math.expm1(np.trapz(diff, grid) / 10.0)
        assert bd_rate(test, reference) == pytest.approx(oracle, rel=1e-6, abs=1e-8)


class SerializerTests(SimpleTestCase):
    def test_dict_round_trip(self):
        curve = curve_from_dict(curve_to_dict(REFERENCE))
        self.assertEqual(curve, REFERENCE)

    def test_frame_columns(self):
        frame = curve_to_frame(REFERENCE)
        self.assertEqual(list(frame.columns), ["rate_kbps", "quality", "metric"])
        self.assertEqual(len(frame), 4)


def test_load_rd_curve_csv(tmp_path):
    path = tmp_path / "curve.csv"
    curve_to_frame(REFERENCE).to_csv(path, index=False)
    assert load_rd_curve(path) == REFERENCE


def test_three_row_csv_names_the_file(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("rate_kbps,quality\n100,30\n200,33\n400,36\n")
    with pytest.raises(CurveValidationError, match="short.csv"):
        load_rd_curve(path)


def test_non_numeric_cell_names_the_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("rate_kbps,quality\n100,30\n200,abc\n400,36\n800,39\n")
    with pytest.raises(CurveValidationError, match="row 2"):
        load_rd_curve(path)


class PSNRTests(SimpleTestCase):
    def test_identical_clips_hit_the_cap(self):
        clip = ClipFactory()
        self.assertEqual(psnr(clip, clip), PSNR_CAP)

    def test_constant_offset(self):
        ref = ConstantClipFactory(value=100)
        test = ConstantClipFactory(value=108)
        self.assertAlmostEqual(psnr(ref, test), 10 * math.log10(255**2 / 64), places=9)

    def test_mismatched_clips(self):
        with self.assertRaises(FrameGeometryError):
            psnr(ConstantClipFactory(n_frames=2), ConstantClipFactory(n_frames=3))
        with self.assertRaises(FrameGeometryError):
            psnr(ConstantClipFactory(width=32), ConstantClipFactory(width=64))

    def test_plane_psnr_per_channel(self):
        ref = ConstantClipFactory(value=100)
        y, u, v = plane_psnr(ref, ConstantClipFactory(value=108))
        self.assertAlmostEqual(y, u)
        self.assertAlmostEqual(u, v)


class MSSSIMTests(SimpleTestCase):
    def test_identical_clips(self):
        clip = textured_clip(width=176, height=176, n_frames=1)
        self.assertEqual(ms_ssim(clip, clip), 1.0)

    def test_symmetric(self):
        clip = textured_clip(width=176, height=176, n_frames=2)
        noisy = add_gaussian_noise(clip, 8.0, seed=4)
        self.assertAlmostEqual(ms_ssim(clip, noisy), ms_ssim(noisy, clip), places=12)

    def test_small_frames_are_rejected(self):
        clip = ClipFactory(width=64, height=64, n_frames=1)
        with self.assertRaises(FrameGeometryError):
            ms_ssim(clip, clip)

    def test_score_falls_with_noise(self):
        clip = textured_clip(width=176, height=176, n_frames=2)
        light = ms_ssim(clip, add_gaussian_noise(clip, 3.0, seed=1))
        heavy = ms_ssim(clip, add_gaussian_noise(clip, 20.0, seed=1))
        self.assertGreater(light, heavy)
        self.assertLess(light, 1.0)
