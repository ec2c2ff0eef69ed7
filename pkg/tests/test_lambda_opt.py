import math
from fractions import Fraction
from unittest.mock import MagicMock

import numpy as np
import pandas as pd
import pytest
from django.test import SimpleTestCase
from sklearn.metrics import r2_score

from apps.codec_gateway.domain import EncodeResult, SyntheticCodecSpec
from apps.codec_gateway.gateway import SyntheticGateway
from apps.codec_gateway.profiles import load_profile
from apps.codec_gateway.synthetic import closed_form_bd_rate, synthetic_frame_stats
from apps.core.artifacts import read_json
from apps.core.exceptions import InsufficientDataError, JobConfigError, SchemaMismatchError, StatsParseError
from apps.lambda_opt.domain import (
    EarlyStop,
    HistoryEntry,
    LambdaSearchConfig,
    LambdaSearchOutcome,
    ProxyStrategy,
    best_so_far,
)
from apps.lambda_opt.features import KFeatureVector, extract_k_features, first_pass_features
from apps.lambda_opt.predictor import KPredictor, predict_k, train_k_predictor
from apps.lambda_opt.proxy import make_proxy, optimize_with_proxy
from apps.lambda_opt.reports import outcome_rows, summarize_outcomes, write_outcome, write_summary
from apps.lambda_opt.search import NO_IMPROVEMENT, optimize_k, should_continue
from apps.video_io.domain import ClipMeta

META = ClipMeta(1920, 1080, 60, Fraction(30), "planted")
PLANTED_GAIN = 100.0 * (1.0 / (1.0 + 0.5 * math.log(2.0) ** 2) - 1.0)
PATIENT = EarlyStop(min_improvement_pct=1e-6, patience=3, encode_budget=10_000)


def planted_gateway(**spec):
    return SyntheticGateway(SyntheticCodecSpec(**{"k_star": (2.0,), "gamma": 0.5, **spec}))


class LambdaSearchConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = LambdaSearchConfig()
        self.assertEqual(config.k_bounds, (1.0 / 16.0, 16.0))
        self.assertEqual(config.proxy, ProxyStrategy.NONE)
        self.assertAlmostEqual(config.log_bounds[1], math.log(16.0))

    def test_bounds_must_contain_one(self):
        with self.assertRaises(JobConfigError):
            LambdaSearchConfig(k_bounds=(2.0, 4.0))

    def test_dims_limited_to_two(self):
        with self.assertRaises(JobConfigError):
            LambdaSearchConfig(dims=3)

    def test_clamp(self):
        config = LambdaSearchConfig()
        self.assertEqual(config.clamp(100.0), 16.0)
        self.assertEqual(config.clamp(0.001), 1.0 / 16.0)

    def test_early_stop_validation(self):
        with self.assertRaises(JobConfigError):
            EarlyStop(patience=0)
        with self.assertRaises(JobConfigError):
            EarlyStop(encode_budget=0)

    def test_proxy_parsed_from_string(self):
        self.assertIs(LambdaSearchConfig(proxy="fast_preset").proxy, ProxyStrategy.FAST_PRESET)


class ShouldContinueTests(SimpleTestCase):
    def test_budget_exhausted(self):
        decision = should_continue([], EarlyStop(encode_budget=10), encodes_used=10)
        self.assertFalse(decision)
        self.assertIn("budget", decision.reason)

    def test_short_history_continues(self):
        self.assertTrue(should_continue([-1.0, -2.0], EarlyStop()))

    def test_stalled_best_stops(self):
        decision = should_continue([-1.0, -5.0, -5.01, -5.02, -5.03], EarlyStop())
        self.assertFalse(decision)
        self.assertIn("last 3 iterations", decision.reason)

    def test_recent_improvement_continues(self):
        self.assertTrue(should_continue([-1.0, -5.0, -5.01, -5.02], EarlyStop()))

    def test_best_so_far(self):
        self.assertEqual(best_so_far([3.0, 1.0, 2.0, 0.5]), [3.0, 1.0, 1.0, 0.5])


class OptimizeKTests(SimpleTestCase):
    def test_recovers_planted_k(self):
        outcome = optimize_k(planted_gateway(), META, LambdaSearchConfig(early_stop=PATIENT))
        self.assertAlmostEqual(outcome.k_opt[0], 2.0, delta=0.1)
        self.assertAlmostEqual(outcome.bd_rate_gain, PLANTED_GAIN, delta=0.3)
        self.assertEqual(outcome.source_id, "planted")
        self.assertGreater(outcome.total_encodes, 0)
        self.assertEqual(outcome.iterations, len(outcome.history))

    def test_gain_is_bd_rate_at_returned_k(self):
        outcome = optimize_k(planted_gateway(), META, LambdaSearchConfig(early_stop=PATIENT))
        self.assertAlmostEqual(outcome.bd_rate_gain, closed_form_bd_rate(0.5, outcome.k_opt, (2.0,)), places=9)

    def test_default_early_stop_keeps_most_of_the_gain(self):
        outcome = optimize_k(planted_gateway(), META, LambdaSearchConfig())
        self.assertLess(outcome.bd_rate_gain, -18.0)

    def test_recovers_two_planted_multipliers(self):
        gateway = planted_gateway(k_star=(4.0, 1.5))
        outcome = optimize_k(gateway, META, LambdaSearchConfig(dims=2, early_stop=PATIENT))
        self.assertEqual(len(outcome.k_opt), 2)
        self.assertAlmostEqual(outcome.k_opt[0], 4.0, delta=0.4)
        self.assertAlmostEqual(outcome.k_opt[1], 1.5, delta=0.15)
        self.assertLess(outcome.bd_rate_gain, 0.0)
        self.assertGreaterEqual(outcome.optimizer_iterations, 1)

    def test_planted_one_reports_no_improvement(self):
        outcome = optimize_k(planted_gateway(k_star=(1.0,)), META, LambdaSearchConfig(early_stop=PATIENT))
        self.assertEqual(outcome.k_opt, (1.0,))
        self.assertEqual(outcome.bd_rate_gain, 0.0)
        self.assertEqual(outcome.terminated_early, NO_IMPROVEMENT)

    def test_encode_budget_stops_search(self):
        config = LambdaSearchConfig(early_stop=EarlyStop(encode_budget=12))
        outcome = optimize_k(planted_gateway(), META, config)
        # baseline sweep plus two five-QP cost sweeps
        self.assertEqual(outcome.total_encodes, 15)
        self.assertEqual(outcome.iterations, 2)
        self.assertIn("budget", outcome.terminated_early)
        self.assertFalse(outcome.converged)

    def test_history_counts_encodes(self):
        gateway = planted_gateway()
        outcome = optimize_k(gateway, META, LambdaSearchConfig(early_stop=PATIENT))
        per_sweep = len(gateway.qp_list)
        used = [h.encodes_used for h in outcome.history]
        # the k = 1 baseline sweep comes first
        self.assertEqual(used, [per_sweep * (i + 2) for i in range(len(used))])
        self.assertEqual(outcome.total_encodes, per_sweep * (outcome.iterations + 1))

    def test_outcome_serializes(self):
        outcome = optimize_k(planted_gateway(), META, LambdaSearchConfig(early_stop=PATIENT))
        payload = outcome.to_dict()
        self.assertEqual(payload["proxy"], "none")
        self.assertIsInstance(payload["k_opt"], list)
        self.assertEqual(len(payload["history"]), outcome.iterations)


class ProxyTests(SimpleTestCase):
    def test_none_strategy_rejected(self):
        with self.assertRaises(ValueError):
            make_proxy(META, planted_gateway(), ProxyStrategy.NONE)

    def test_fast_preset_on_gateway(self):
        clip, gateway = make_proxy(META, planted_gateway(), ProxyStrategy.FAST_PRESET)
        self.assertIs(clip, META)
        self.assertEqual(gateway.preset, "fast")

    def test_fast_preset_on_profile(self):
        profile = load_profile("x264")
        _, proxied = make_proxy(META, profile, "fast_preset")
        self.assertEqual(proxied.preset, profile.preset_ladder[0])

    def test_downsample_takes_tall_sources_to_144_lines(self):
        clip, _ = make_proxy(META, planted_gateway(), ProxyStrategy.DOWNSAMPLE)
        self.assertEqual((clip.width, clip.height), (256, 144))

    def test_downsample_is_identity_at_proxy_size(self):
        small = ClipMeta(256, 144, 10, Fraction(30), "small")
        clip, _ = make_proxy(small, planted_gateway(), ProxyStrategy.DOWNSAMPLE)
        self.assertIs(clip, small)

    def test_fast_preset_keeps_gain_at_a_fraction_of_the_time(self):
        gateway = planted_gateway()
        full = optimize_k(gateway, META, LambdaSearchConfig(early_stop=PATIENT))
        proxied = optimize_with_proxy(gateway, META, LambdaSearchConfig(early_stop=PATIENT, proxy="fast_preset"))
        self.assertGreaterEqual(proxied.bd_rate_gain / full.bd_rate_gain, 0.8)
        self.assertLess(proxied.proxy_encode_time, 0.2 * full.wall_time)
        self.assertEqual(proxied.proxy, ProxyStrategy.FAST_PRESET)
        self.assertAlmostEqual(proxied.wall_time, proxied.proxy_encode_time + proxied.full_encode_time)

    def test_downsample_without_drift_keeps_gain(self):
        gateway = planted_gateway(native_height=1080)
        proxied = optimize_with_proxy(gateway, META, LambdaSearchConfig(early_stop=PATIENT, proxy="downsample"))
        self.assertGreaterEqual(proxied.bd_rate_gain / PLANTED_GAIN, 0.8)

    def test_drifted_proxy_is_measured_at_full_fidelity(self):
        gateway = planted_gateway(native_height=1080, proxy_k_drift=1.5)
        proxied = optimize_with_proxy(gateway, META, LambdaSearchConfig(early_stop=PATIENT, proxy="downsample"))
        self.assertAlmostEqual(proxied.k_opt[0], 3.0, delta=0.15)
        self.assertAlmostEqual(proxied.proxy_k_gain, PLANTED_GAIN, delta=0.3)
        self.assertAlmostEqual(proxied.bd_rate_gain, closed_form_bd_rate(0.5, proxied.k_opt, (2.0,)), places=9)
        self.assertGreater(proxied.bd_rate_gain, proxied.proxy_k_gain)


def feature_vector(k_star=(1.0,), qp=32.0, bitrate=1000.0) -> KFeatureVector:
    stats = synthetic_frame_stats(SyntheticCodecSpec(k_star=k_star), META, qp, bitrate, k_star)
    return extract_k_features(stats, META)


class FeatureTests(SimpleTestCase):
    def test_schema(self):
        self.assertEqual(len(KFeatureVector.names()), 36)
        self.assertEqual(len(KFeatureVector.schema_hash()), 16)
        self.assertEqual(feature_vector().as_array().shape, (36,))

    def test_gop_counts_and_bitrate(self):
        features = feature_vector(bitrate=1000.0)
        self.assertEqual(features.p_count, 14.0)
        self.assertEqual(features.b_count, 45.0)
        self.assertAlmostEqual(features.bitrate, 1000.0, delta=1.0)
        self.assertEqual(features.missing_frame_types, ())

    def test_interactions_are_products(self):
        features = feature_vector(k_star=(3.0,))
        self.assertTrue(features.interactions_consistent())
        self.assertAlmostEqual(features.bitrate_x_pb_size, features.bitrate * features.pb_size)

    def test_explicit_bitrate_wins(self):
        stats = synthetic_frame_stats(SyntheticCodecSpec(), META, 32.0, 1000.0, (1.0,))
        self.assertEqual(extract_k_features(stats, META, bitrate_kbps=42.0).bitrate, 42.0)

    def test_missing_b_frames(self):
        stats = [s for s in synthetic_frame_stats(SyntheticCodecSpec(), META, 32.0, 1000.0, (1.0,)) if s.frame_type != "B"]
        features = extract_k_features(stats, META)
        self.assertEqual(features.missing_frame_types, ("B",))
        self.assertEqual(features.pb_ratio_y, 0.0)
        self.assertEqual(features.pb_size, 0.0)

    def test_first_pass_encodes_middle_qp_at_unit_k(self):
        gateway = planted_gateway()
        features = first_pass_features(gateway, META)
        middle = gateway.encode(META, gateway.qp_list[len(gateway.qp_list) // 2])
        self.assertEqual(features.bitrate, middle.bitrate_kbps)
        self.assertEqual(features.p_count, 14.0)

    def test_first_pass_without_stats(self):
        gateway = MagicMock(qp_list=(22, 27, 32))
        gateway.encode.return_value = EncodeResult(bitrate_kbps=100.0, wall_time=1.0)
        with self.assertRaises(StatsParseError):
            first_pass_features(gateway, META)
        gateway.encode.assert_called_once_with(META, 27, None)


def k_dataset(n=24):
    dataset = []
    for i in range(n):
        k = 0.5 + 0.25 * (i % 8)
        dataset.append((feature_vector(k_star=(k,), qp=22.0 + i % 5 * 5, bitrate=500.0 + 100.0 * i), k))
    return dataset


class KPredictorTests(SimpleTestCase):
    def test_too_few_samples(self):
        with self.assertRaises(InsufficientDataError):
            train_k_predictor(k_dataset(5))

    def test_forest_fits_training_targets(self):
        dataset = k_dataset()
        model = train_k_predictor(dataset, forest_params={"n_estimators": 20}, seed=3)
        self.assertFalse(model.constant)
        errors = [abs(predict_k(model, f) - k) for f, k in dataset]
        self.assertLess(sum(errors) / len(errors), 0.5)

    def test_constant_target_uses_constant_model(self):
        dataset = [(f, 2.0) for f, _ in k_dataset()]
        model = train_k_predictor(dataset)
        self.assertTrue(model.constant)
        self.assertEqual(predict_k(model, dataset[0][0]), 2.0)

    def test_prediction_clamped_to_bounds(self):
        model = train_k_predictor([(f, 40.0) for f, _ in k_dataset()])
        self.assertEqual(predict_k(model, feature_vector()), 16.0)
        self.assertEqual(predict_k(model, feature_vector(), k_bounds=(0.5, 4.0)), 4.0)

    def test_schema_mismatch(self):
        model = train_k_predictor([(f, 2.0) for f, _ in k_dataset()])
        model.schema_hash = "0" * 16
        with self.assertRaises(SchemaMismatchError):
            predict_k(model, feature_vector())


def test_predictor_save_and_load(tmp_path):
    dataset = k_dataset()
    model = train_k_predictor(dataset, forest_params={"n_estimators": 10}, seed=1)
    path = model.save(tmp_path / "k_predictor.json")
    loaded = KPredictor.load(path)
    assert loaded.schema_hash == model.schema_hash
    assert loaded.params["seed"] == 1
    assert predict_k(loaded, dataset[0][0]) == pytest.approx(predict_k(model, dataset[0][0]))


def random_k_dataset(n, seed=7):
    """k is the planted B-frame scale, read back through the first-pass stats."""
    rng = np.random.default_rng(seed)
    dataset = []
    for _ in range(n):
        k = float(rng.uniform(0.5, 4.0))
        features = feature_vector(k_star=(k,), qp=float(rng.uniform(22.0, 42.0)), bitrate=float(rng.uniform(200.0, 5000.0)))
        dataset.append((features, k))
    return dataset


def test_noiseless_k_is_learned():
    dataset = random_k_dataset(500)
    model = train_k_predictor(dataset, seed=0)
    predicted = [predict_k(model, features) for features, _ in dataset]
    assert r2_score([k for _, k in dataset], predicted) >= 0.95


def test_same_seed_gives_identical_predictor_file(tmp_path):
    dataset = random_k_dataset(60)
    first = train_k_predictor(dataset, forest_params={"n_estimators": 20}, seed=4).save(tmp_path / "first.json")
    second = train_k_predictor(dataset, forest_params={"n_estimators": 20}, seed=4).save(tmp_path / "second.json")
    assert first.read_bytes() == second.read_bytes()


def make_outcome(source_id, k, gain, iterations=5):
    return LambdaSearchOutcome(
        source_id=source_id,
        k_opt=(k,),
        bd_rate_gain=gain,
        iterations=iterations,
        optimizer_iterations=iterations - 1,
        total_encodes=iterations * 5,
        wall_time=1.5,
        history=(HistoryEntry((k,), gain, iterations * 5),),
    )


class ReportTests(SimpleTestCase):
    def setUp(self):
        self.outcomes = [make_outcome("b", 2.0, -3.0, 4), make_outcome("a", 1.0, -0.5, 6), make_outcome("c", 3.0, -8.0, 8)]

    def test_summary_row(self):
        row = summarize_outcomes(self.outcomes, "synthetic", "psnr")
        self.assertEqual(row["clips"], 3)
        self.assertEqual(row["mean_k"], "2")
        self.assertAlmostEqual(row["avg_iterations"], 6.0)
        self.assertAlmostEqual(row["avg_bd_rate"], -11.5 / 3)
        self.assertEqual(row["best_bd_rate"], -8.0)
        self.assertEqual(row["clips_gain_over_1pct"], 2)
        self.assertEqual(row["clips_gain_over_5pct"], 1)

    def test_empty_summary(self):
        row = summarize_outcomes([], "synthetic", "psnr")
        self.assertEqual(row["clips"], 0)
        self.assertIsNone(row["avg_bd_rate"])

    def test_rows_sorted_by_source(self):
        self.assertEqual([r["source_id"] for r in outcome_rows(self.outcomes)], ["a", "b", "c"])

    def test_infinite_gain_written_as_blank(self):
        rows = outcome_rows([make_outcome("x", 1.0, math.inf)])
        self.assertIsNone(rows[0]["bd_rate_gain"])


def test_write_outcome_and_summary(tmp_path):
    outcome = make_outcome("clip", 2.0, -4.0)
    payload = read_json(write_outcome(tmp_path / "clip.json", outcome, seed=7), expected_kind="lambda_outcome")
    assert payload["seed"] == 7
    assert payload["k_opt"] == [2.0]
    assert payload["history"][0]["bd_rate"] == -4.0

    frame = pd.read_csv(write_summary(tmp_path / "summary.csv", [outcome], "synthetic", "psnr"))
    assert list(frame.columns)[:3] == ["encoder", "tuning", "clips"]
    assert frame.loc[0, "clips"] == 1
