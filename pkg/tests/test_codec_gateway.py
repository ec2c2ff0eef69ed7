import math
import subprocess
from fractions import Fraction
from pathlib import Path
from unittest.mock import patch

import pytest
from django.test import SimpleTestCase

from apps.codec_gateway.cache_service import EncodeCacheService, clip_digest
from apps.codec_gateway.domain import EncoderProfile, SyntheticCodecSpec, normalize_k
from apps.codec_gateway.external import parse_frame_stats, parse_x264_stats, run_external_encode
from apps.codec_gateway.gateway import ExternalGateway, SyntheticGateway, rd_curve, rd_sweep
from apps.codec_gateway.profiles import load_profile, render_command, with_preset
from apps.codec_gateway.synthetic import closed_form_bd_rate, effective_k_star, synth_encode
from apps.codec_gateway.toy_codec import toy_intra_encode
from apps.core.exceptions import EncodeError, EncoderSpawnError, JobConfigError, StatsParseError
from apps.lambda_opt.features import first_pass_features
from apps.metrics.bjontegaard import bd_rate
from apps.metrics.quality import psnr
from apps.video_io.domain import ClipMeta
from apps.video_io.patterns import textured_clip
from apps.video_io.y4m import write_y4m, write_y4m_file
from tests.factories import ClipFactory, FrameStatFactory

META = ClipMeta(1920, 1080, 60, Fraction(30), "planted")
PLANTED_GAIN = 100.0 * (1.0 / (1.0 + 0.5 * math.log(2.0) ** 2) - 1.0)


class SyntheticCodecTests(SimpleTestCase):
    def setUp(self):
        self.spec = SyntheticCodecSpec(k_star=(2.0,), gamma=0.5)
        self.gateway = SyntheticGateway(self.spec)

    def test_closed_form_gain(self):
        self.assertAlmostEqual(closed_form_bd_rate(0.5, (2.0,), (2.0,)), PLANTED_GAIN, places=12)
        self.assertAlmostEqual(PLANTED_GAIN, -19.3696, places=3)

    def test_bd_rate_at_planted_k_matches_closed_form(self):
        tuned = rd_curve(self.gateway, META, (2.0,))
        baseline = rd_curve(self.gateway, META, (1.0,))
        self.assertAlmostEqual(bd_rate(tuned, baseline), PLANTED_GAIN, delta=1e-9)

    def test_rate_is_lowest_at_planted_k(self):
        rates = {k: synth_encode(self.spec, META, 32, k_vector=(k,)).bitrate_kbps for k in (1.0, 2.0, 4.0)}
        self.assertLess(rates[2.0], rates[1.0])
        self.assertLess(rates[2.0], rates[4.0])

    def test_faster_preset_is_cheaper(self):
        slow = synth_encode(self.spec, META, 32, preset="medium")
        fast = synth_encode(self.spec, META, 32, preset="fast")
        self.assertAlmostEqual(fast.wall_time / slow.wall_time, 0.01)

    def test_frame_stats_follow_gop(self):
        result = synth_encode(self.spec, META, 32)
        stats = result.per_frame_stats
        self.assertEqual(len(stats), META.n_frames)
        self.assertEqual(stats[0].frame_type, "I")
        self.assertEqual(stats[4].frame_type, "P")
        self.assertEqual(stats[1].frame_type, "B")

    def test_jitter_is_seeded(self):
        noisy = SyntheticCodecSpec(k_star=(2.0,), noise_std_log=0.1, seed=5)
        a = synth_encode(noisy, META, 32)
        b = synth_encode(noisy, META, 32)
        c = synth_encode(SyntheticCodecSpec(k_star=(2.0,), noise_std_log=0.1, seed=6), META, 32)
        self.assertEqual(a.bitrate_kbps, b.bitrate_kbps)
        self.assertNotEqual(a.bitrate_kbps, c.bitrate_kbps)

    def test_proxy_drift_applies_below_native_height(self):
        spec = SyntheticCodecSpec(k_star=(2.0,), proxy_k_drift=1.5, native_height=1080)
        small = ClipMeta(256, 144, 60, Fraction(30), "planted")
        self.assertEqual(effective_k_star(spec, META, None), (2.0,))
        self.assertEqual(effective_k_star(spec, small, None), (3.0,))
        self.assertEqual(effective_k_star(spec, META, "fast"), (3.0,))

    def test_two_dimensional_spec_names_groups(self):
        spec = SyntheticCodecSpec(k_star=(4.0, 1.5))
        self.assertEqual(SyntheticGateway(spec).frame_groups, ("G1", "G2"))

    def test_invalid_spec(self):
        with self.assertRaises(ValueError):
            SyntheticCodecSpec(k_star=(0.0,))
        with self.assertRaises(ValueError):
            SyntheticCodecSpec(gamma=-1.0)

    def test_encode_count(self):
        rd_sweep(self.gateway, META)
        self.assertEqual(self.gateway.encode_count, len(self.spec.qp_list))

    def test_sweep_is_ordered_by_qp(self):
        results = rd_sweep(self.gateway, META, workers=4)
        self.assertEqual([r.qp for r in results], sorted(self.spec.qp_list))

    def test_with_preset_keeps_spec(self):
        fast = self.gateway.with_preset("fast")
        self.assertEqual(fast.preset, "fast")
        self.assertIs(fast.spec, self.spec)


def test_normalize_k():
    assert normalize_k(None, 2) == (1.0, 1.0)
    assert normalize_k([2], 2) == (2.0, 1.0)
    with pytest.raises(ValueError):
        normalize_k([-1.0], 1)


class ProfileTests(SimpleTestCase):
    def test_shipped_profiles_load(self):
        for name in ("x264", "x264-stats", "x264-lambda", "x265", "libaom-av1", "svt-av1"):
            profile = load_profile(name)
            self.assertGreaterEqual(len(profile.qp_list), 4)
            self.assertEqual(profile.preset, profile.default_preset)

    def test_x264_stats_profiles(self):
        stats = load_profile("x264-stats")
        self.assertIn("{STATS}", stats.command_template)
        self.assertEqual(stats.stats_format, "x264")
        self.assertEqual(stats.k_slots, 0)
        self.assertEqual(load_profile("x264-lambda").k_slots, 1)

    def test_unknown_stats_format(self):
        with self.assertRaises(JobConfigError):
            load_profile("x264", {"stats_format": "xml"})

    def test_unknown_profile(self):
        with self.assertRaises(JobConfigError):
            load_profile("nope")

    def test_preset_must_be_on_ladder(self):
        profile = load_profile("x264")
        self.assertEqual(with_preset(profile, "veryslow").preset, "veryslow")
        with self.assertRaises(JobConfigError):
            with_preset(profile, "ludicrous")

    def test_template_needs_placeholders(self):
        with self.assertRaises(ValueError):
            EncoderProfile(name="bad", command_template="enc {INPUT} {OUTPUT}", qp_list=(1, 2, 3, 4))
        with self.assertRaises(ValueError):
            EncoderProfile(name="bad", command_template="enc {INPUT} {OUTPUT} {QP}", qp_list=(1, 2, 3))

    def test_render_command_keeps_paths_whole(self):
        argv = render_command("enc --crf {QP} -o {OUTPUT} {INPUT}", {"QP": "32", "OUTPUT": "/tmp/a b.bin", "INPUT": "in.y4m"})
        self.assertEqual(argv, ["enc", "--crf", "32", "-o", "/tmp/a b.bin", "in.y4m"])


FAKE_PROFILE = EncoderProfile(
    name="fake",
    command_template="fakeenc --crf {QP} --k {K1} -o {OUTPUT} {INPUT}",
    qp_list=(22, 27, 32, 37),
    output_suffix=".y4m",
)


def _echo_encoder(clip):
    """subprocess.run double that 'encodes' by writing the source back out."""

    def run(argv, **kwargs):
        output = Path(argv[argv.index("-o") + 1])
        output.write_bytes(write_y4m(clip))
        return subprocess.CompletedProcess(argv, 0, b"", b"")

    return run


@pytest.fixture
def scratch(tmp_path, settings):
    settings.CLIPFORGE = {**settings.CLIPFORGE, "TMPDIR": str(tmp_path / "scratch")}
    return tmp_path / "scratch"


def test_external_encode_measures_decoded_output(tmp_path, scratch, mocker):
    clip = ClipFactory(width=32, height=32, n_frames=3)
    path = write_y4m_file(tmp_path / "src.y4m", clip)
    run = mocker.patch("apps.codec_gateway.external.subprocess.run", side_effect=_echo_encoder(clip))

    result = run_external_encode(FAKE_PROFILE, path, 27, k_vector=(1.5,), source=clip)

    argv = run.call_args.args[0]
    assert argv[:5] == ["fakeenc", "--crf", "27", "--k", "1.5"]
    assert result.quality == 99.0
    assert result.bitrate_kbps == pytest.approx(len(write_y4m(clip)) * 8 / clip.duration / 1000.0)
    assert result.k_vector == (1.5,)
    assert list(scratch.iterdir()) == []


def test_external_encode_failure_keeps_stderr(tmp_path, scratch, mocker):
    clip = ClipFactory(width=16, height=16, n_frames=1)
    path = write_y4m_file(tmp_path / "src.y4m", clip)
    mocker.patch(
        "apps.codec_gateway.external.subprocess.run",
        return_value=subprocess.CompletedProcess([], 3, b"", b"bad option --k"),
    )
    with pytest.raises(EncodeError, match="bad option"):
        run_external_encode(FAKE_PROFILE, path, 27, source=clip)


def test_missing_encoder_binary(tmp_path, scratch):
    clip = ClipFactory(width=16, height=16, n_frames=1)
    path = write_y4m_file(tmp_path / "src.y4m", clip)
    with patch("apps.codec_gateway.external.subprocess.run", side_effect=FileNotFoundError("fakeenc")):
        with pytest.raises(EncoderSpawnError):
            run_external_encode(FAKE_PROFILE, path, 27, source=clip)


def test_empty_output_is_an_error(tmp_path, scratch, mocker):
    clip = ClipFactory(width=16, height=16, n_frames=1)
    path = write_y4m_file(tmp_path / "src.y4m", clip)

    def run(argv, **kwargs):
        Path(argv[argv.index("-o") + 1]).write_bytes(b"")
        return subprocess.CompletedProcess(argv, 0, b"", b"")

    mocker.patch("apps.codec_gateway.external.subprocess.run", side_effect=run)
    with pytest.raises(EncodeError, match="no output"):
        run_external_encode(FAKE_PROFILE, path, 27, source=clip)


def test_external_gateway_stages_clips_and_cleans_up(scratch, mocker):
    clip = ClipFactory(width=16, height=16, n_frames=2)
    mocker.patch("apps.codec_gateway.external.subprocess.run", side_effect=_echo_encoder(clip))
    gateway = ExternalGateway(FAKE_PROFILE)
    results = rd_sweep(gateway, clip)
    assert [r.qp for r in results] == [22, 27, 32, 37]
    assert gateway.encode_count == 4
    gateway.close()
    assert list(scratch.iterdir()) == []


def test_external_gateway_needs_samples(scratch):
    with pytest.raises(TypeError):
        ExternalGateway(FAKE_PROFILE).encode(META, 27)


def test_parse_frame_stats(tmp_path):
    rows = [FrameStatFactory(frame_index=i).as_row() for i in (2, 0, 1)]
    path = tmp_path / "stats.csv"
    path.write_text(
        "frame_index,frame_type,bits,avg_qp,q_y,q_u,q_v\n"
        + "".join(f"{r['frame_index']},{r['frame_type']},{r['bits']},{r['avg_qp']},{r['q_y']},{r['q_u']},{r['q_v']}\n" for r in rows)
    )
    stats = parse_frame_stats(path)
    assert [s.frame_index for s in stats] == [0, 1, 2]


def test_parse_frame_stats_rejects_bad_rows(tmp_path):
    missing = tmp_path / "missing.csv"
    missing.write_text("frame_index,bits\n0,100\n")
    with pytest.raises(StatsParseError):
        parse_frame_stats(missing)
    unknown = tmp_path / "unknown.csv"
    unknown.write_text("frame_index,frame_type,bits,avg_qp\n0,Z,100,30\n")
    with pytest.raises(StatsParseError):
        parse_frame_stats(unknown)


X264_STATS = """#options: 32x32 fps=30/1 timebase=1/30 bitdepth=8 cabac=1 ref=3 bframes=3
in:0 out:0 type:I dur:2 cpbdur:2 q:24.00 aq:21.50 tex:9000 mv:200 misc:300 imb:4 pmb:0 smb:0 d:- ref:;
in:3 out:1 type:P dur:2 cpbdur:2 q:27.00 aq:24.80 tex:3000 mv:400 misc:100 imb:0 pmb:3 smb:1 d:- ref:0 ;
in:1 out:2 type:B dur:2 cpbdur:2 q:28.50 aq:26.10 tex:1200 mv:150 misc:50 imb:0 pmb:2 smb:2 d:- ref:0 ;
in:2 out:3 type:b dur:2 cpbdur:2 q:30.00 aq:27.40 tex:700 mv:90 misc:10 imb:0 pmb:1 smb:3 d:- ref:0 ;
"""


def test_parse_x264_stats(tmp_path):
    path = tmp_path / "stats.x264"
    path.write_text(X264_STATS)
    stats = parse_x264_stats(path)
    assert [s.frame_index for s in stats] == [0, 1, 2, 3]
    assert [s.frame_type for s in stats] == ["I", "B", "B", "P"]
    assert [s.bits for s in stats] == [9500, 1400, 800, 3500]
    assert stats[0].avg_qp == 24.0
    assert stats[0].q_y is None


def test_parse_x264_stats_rejects_garbage(tmp_path):
    path = tmp_path / "stats.x264"
    path.write_text("#options: nothing\n")
    with pytest.raises(StatsParseError, match="no frames"):
        parse_x264_stats(path)
    path.write_text("in:0 out:0 type:Q q:20 tex:1 mv:1 misc:1\n")
    with pytest.raises(StatsParseError):
        parse_x264_stats(path)


def _x264_first_pass(clip):
    """subprocess.run double for x264 --pass 1: writes the stream and the stats file."""

    def run(argv, **kwargs):
        Path(argv[argv.index("--output") + 1]).write_bytes(write_y4m(clip))
        Path(argv[argv.index("--stats") + 1]).write_text(X264_STATS)
        return subprocess.CompletedProcess(argv, 0, b"", b"")

    return run


def test_x264_stats_profile_feeds_first_pass_features(scratch, mocker):
    clip = ClipFactory(width=32, height=32, n_frames=4)
    run = mocker.patch("apps.codec_gateway.external.subprocess.run", side_effect=_x264_first_pass(clip))
    profile = load_profile("x264-stats", {"decode_command_template": None, "output_suffix": ".y4m"})
    gateway = ExternalGateway(profile)

    features = first_pass_features(gateway, clip)

    argv = run.call_args.args[0]
    assert argv[argv.index("--crf") + 1] == "32"
    assert argv[argv.index("--pass") + 1] == "1"
    assert features.missing_frame_types == ()
    gateway.close()
    assert list(scratch.iterdir()) == []


class CachedSyntheticGateway(SyntheticGateway):
    def cache_identity(self, clip):
        return f"synthetic:{clip.source_id}"


@pytest.mark.django_db
def test_encode_cache_serves_repeat_sweeps(encode_cache_enabled):
    gateway = CachedSyntheticGateway(SyntheticCodecSpec(k_star=(2.0,)))
    first = rd_sweep(gateway, META, (1.5,))
    second = rd_sweep(gateway, META, (1.5,))
    assert gateway.encode_count == len(first)
    assert all("cached" in r.flags for r in second)
    assert [r.bitrate_kbps for r in first] == [r.bitrate_kbps for r in second]


def test_cache_is_bypassed_when_disabled():
    gateway = CachedSyntheticGateway(SyntheticCodecSpec(k_star=(2.0,)))
    rd_sweep(gateway, META)
    rd_sweep(gateway, META)
    assert gateway.encode_count == 2 * len(gateway.qp_list)


class EncodeCacheServiceTests(SimpleTestCase):
    def test_key_depends_on_every_field(self):
        service = EncodeCacheService()
        base = service.generate_key("d", "x264", "medium", 32, (1.0,))
        self.assertNotEqual(base, service.generate_key("d", "x264", "medium", 32, (1.1,)))
        self.assertNotEqual(base, service.generate_key("d", "x264", "slow", 32, (1.0,)))
        self.assertNotEqual(base, service.generate_key("d", "x264", "medium", 37, (1.0,)))

    @patch("apps.codec_gateway.cache_service.caches")
    def test_backend_errors_degrade_to_miss(self, mock_caches):
        mock_caches.__getitem__.side_effect = ConnectionError("redis down")
        service = EncodeCacheService()
        self.assertIsNone(service.get_point("k"))
        self.assertFalse(service.set_point("k", {"bitrate_kbps": 1.0}))

    def test_clip_digest_tracks_content(self):
        a = ClipFactory(seed=1)
        self.assertEqual(clip_digest(a), clip_digest(ClipFactory(seed=1)))
        self.assertNotEqual(clip_digest(a), clip_digest(ClipFactory(seed=2)))


class ToyCodecTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.clip = textured_clip(width=64, height=64, n_frames=3)

    def test_rate_control_hits_target(self):
        result = toy_intra_encode(self.clip, 512.0)
        self.assertNotIn("rate_miss", result.flags)
        self.assertAlmostEqual(result.bitrate_kbps / 512.0, 1.0, delta=0.02)

    def test_more_bits_more_quality(self):
        low = toy_intra_encode(self.clip, 128.0).output_clip
        high = toy_intra_encode(self.clip, 1024.0).output_clip
        self.assertGreater(psnr(self.clip, high), psnr(self.clip, low))

    def test_output_geometry_and_stats(self):
        result = toy_intra_encode(self.clip, 256.0)
        self.assertEqual(result.output_clip.n_frames, 3)
        self.assertEqual(len(result.per_frame_stats), 3)
        self.assertTrue(all(s.frame_type == "I" for s in result.per_frame_stats))

    def test_invalid_target(self):
        with self.assertRaises(ValueError):
            toy_intra_encode(self.clip, 0.0)
