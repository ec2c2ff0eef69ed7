from decimal import Decimal
from pathlib import Path

import pandas as pd

from apps.codec_gateway.gateway import ExternalGateway
from apps.codec_gateway.profiles import load_profile, with_preset
from apps.core.artifacts import read_json, write_csv, write_json
from apps.core.decorators import log_run
from apps.core.exceptions import JobConfigError
from apps.core.worker_pool import run_keyed
from apps.load_predict.binning import (
    BinMode,
    DurationClassifier,
    evaluate_duration_classifier,
    make_bins,
    train_duration_classifier,
)
from apps.load_predict.complexity import (
    ComplexityFeatures,
    TimeSample,
    extract_complexity,
    features_from_frame,
    preset_index,
    samples_from_frame,
    samples_to_frame,
)
from apps.load_predict.evaluation import SplitMode, evaluate_bundle, split_dataset
from apps.load_predict.pricing import PricingMode, PricingTable, TranscodeJob, estimate_cost
from apps.load_predict.synthetic import generate_time_corpus
from apps.load_predict.time_model import TargetTransform, TimeModel, predict_time, train_time_model
from apps.video_io.y4m import read_y4m

from ._common import ClipforgeCommand

ACTIONS = ("extract", "train", "eval", "predict")


def money(amount: Decimal) -> str:
    text = f"{amount:f}"
    return text.rstrip("0").rstrip(".") if "." in text else text


class Command(ClipforgeCommand):
    help = "Encode-time prediction and cost: extract | train | eval | predict"
    command_name = "timepred"

    def add_arguments(self, parser):
        parser.add_argument("action", choices=ACTIONS)
        # extract
        parser.add_argument("--clips", nargs="*", default=[], help="Y4M sources")
        parser.add_argument("--profile", default=None, help="encode each clip with this profile and record the wall time")
        parser.add_argument("--preset", default=None, help="preset name on the profile ladder, or an integer index")
        parser.add_argument("--crf", type=int, default=23)
        parser.add_argument("--synthetic", type=int, default=0, help="generate N samples from the synthetic time law")
        parser.add_argument("--noise", type=float, default=0.0, help="log-normal sigma of the synthetic durations")
        parser.add_argument("--sources", type=int, default=20)
        # train / eval
        parser.add_argument("--corpus", default=None, help="samples CSV (features + seconds + source_id)")
        parser.add_argument("--transform", choices=[t.value for t in TargetTransform], default=None)
        parser.add_argument("--bins", type=int, default=0, help="also train a duration classifier with N classes")
        parser.add_argument("--bin-mode", choices=[m.value for m in BinMode], default=BinMode.GEOMETRIC.value)
        parser.add_argument("--split", choices=[m.value for m in SplitMode], default=SplitMode.GENERALISED.value)
        parser.add_argument("--ratio", type=float, default=0.8, help="train fraction")
        # predict
        parser.add_argument("--model", default=None)
        parser.add_argument("--classifier", default=None)
        parser.add_argument("--features", default=None, help="features CSV")
        parser.add_argument("--clip", default=None, help="Y4M clip to extract features from")
        parser.add_argument("--price", choices=[m.value for m in PricingMode], default=None)
        parser.add_argument("--pricing-table", default=None, help="JSON pricing table (default: settings)")
        parser.add_argument("--tier", default="basic")
        parser.add_argument("--codec", nargs="+", default=["h264"])
        parser.add_argument("--region", default="us-east-1")
        parser.add_argument("--instance", default=None, help="instance class for compute_time pricing")
        parser.add_argument("--duration", type=float, default=None, help="output duration in seconds")
        parser.add_argument("--height", type=int, default=None)
        parser.add_argument("--fps", type=float, default=None)
        self.add_common_arguments(parser)

    @log_run("timepred")
    def handle(self, *args, **options):
        job = self.job_config(options)
        getattr(self, f"handle_{options['action']}")(job, options)

    def preset_value(self, options, profile=None) -> int:
        preset = options["preset"]
        if preset is None:
            return preset_index(profile.preset, profile.preset_ladder) if profile and profile.preset_ladder else 0
        if profile and profile.preset_ladder:
            return preset_index(preset, profile.preset_ladder)
        try:
            return int(preset)
        except ValueError:
            raise JobConfigError(f"--preset {preset!r} needs --profile to resolve a name") from None

    def read_samples(self, options):
        if not options["corpus"]:
            raise JobConfigError("--corpus is required")
        return samples_from_frame(pd.read_csv(options["corpus"]), source=options["corpus"])

    def handle_extract(self, job, options):
        manifest = self.start_manifest(job)
        if options["synthetic"]:
            samples = generate_time_corpus(options["synthetic"], seed=job.seed, noise_sigma=options["noise"], n_sources=options["sources"])
            manifest.add(write_csv(manifest.output_dir / "corpus.csv", samples_to_frame(samples)))
            self.finish_manifest(manifest)
            self.stdout.write(f"{len(samples)} synthetic samples")
            return
        if not options["clips"]:
            raise JobConfigError("extract needs --clips or --synthetic")

        profile = None
        if options["profile"]:
            profile = load_profile(options["profile"])
            if options["preset"]:
                profile = with_preset(profile, options["preset"])
        preset = self.preset_value(options, profile)
        gateway = ExternalGateway(profile) if profile else None

        def extract(path):
            clip = read_y4m(path)
            features = extract_complexity(clip, preset, options["crf"])
            if gateway is None:
                return {**features.as_dict(), "source_id": clip.source_id}
            gateway.register(clip, Path(path))
            result = gateway.encode(clip, options["crf"])
            return TimeSample(features, result.wall_time, clip.source_id)

        try:
            results = run_keyed([(str(path), (lambda p=path: extract(p))) for path in sorted(options["clips"])], job.workers)
        finally:
            if gateway is not None:
                gateway.close()

        rows = []
        for result in results:
            if result.ok:
                rows.append(result.value)
            else:
                manifest.fail(result.key, result.error)
        if gateway is None:
            frame = pd.DataFrame(rows, columns=list(ComplexityFeatures.names()) + ["source_id"])
            manifest.add(write_csv(manifest.output_dir / "features.csv", frame))
        else:
            manifest.add(write_csv(manifest.output_dir / "corpus.csv", samples_to_frame(rows)))
        self.finish_manifest(manifest)
        self.stdout.write(f"{len(rows)} clips extracted, {len(manifest.failures)} failed")
        if manifest.failures:
            self.run_status = "partial"

    def handle_train(self, job, options):
        samples = self.read_samples(options)
        transform = options["transform"] or job.time_model.get("transform", TargetTransform.LOG.value)
        model = train_time_model(samples, transform=transform, params=job.time_model.get("params"), seed=job.seed)

        manifest = self.start_manifest(job, {"transform": TargetTransform(transform).value})
        manifest.add(model.save(manifest.output_dir / "time_model.json"))
        if options["bins"]:
            classifier = self.train_classifier(samples, options, job.seed)
            manifest.add(classifier.save(manifest.output_dir / "duration_classifier.json"))
            self.stdout.write(f"duration classifier: {classifier.bins.n_bins} classes, macro recall {classifier.macro_recall:.3f}")
        self.finish_manifest(manifest)
        self.stdout.write(f"trained {model.transform.value} time model on {len(samples)} samples")

    def train_classifier(self, samples, options, seed) -> DurationClassifier:
        seconds = [s.measured_seconds for s in samples]
        bins = make_bins(options["bin_mode"], options["bins"], min(seconds), max(seconds))
        return train_duration_classifier(samples, bins, seed=seed)

    def handle_eval(self, job, options):
        samples = self.read_samples(options)
        train, test = split_dataset(samples, mode=options["split"], ratio=options["ratio"], seed=job.seed)
        params = job.time_model.get("params")
        linear = train_time_model(train, transform=TargetTransform.LINEAR, params=params, seed=job.seed)
        log = train_time_model(train, transform=TargetTransform.LOG, params=params, seed=job.seed)
        bundle = evaluate_bundle(linear, log, test)

        report = {
            "kind": "time_eval_report",
            "split": SplitMode(options["split"]).value,
            "ratio": options["ratio"],
            "n_train": len(train),
            "n_test": len(test),
            "seed": job.seed,
            **{name: block.to_dict() for name, block in bundle.items()},
        }
        if options["bins"]:
            classifier = self.train_classifier(train, options, job.seed)
            report["duration_classifier"] = {
                "bins": classifier.bins.to_dict(),
                **evaluate_duration_classifier(classifier, test),
            }

        manifest = self.start_manifest(job)
        manifest.add(write_json(manifest.output_dir / "eval.json", report))
        self.finish_manifest(manifest)
        for name, block in bundle.items():
            r2 = "n/a" if block.r2 is None else f"{block.r2:.4f}"
            mae = "n/a" if block.mae_pct is None else f"{block.mae_pct:.2f}"
            self.stdout.write(f"{name}: R2={r2} MAE%={mae} sMAE%={block.smae_pct:.2f}")

    def prediction_inputs(self, options):
        if options["features"]:
            frame = pd.read_csv(options["features"])
            features = features_from_frame(frame, source=options["features"])
            ids = frame["source_id"].fillna("").astype(str).tolist() if "source_id" in frame else [f"row{i + 1}" for i in range(len(features))]
            return list(zip(ids, features))
        if options["clip"]:
            clip = read_y4m(options["clip"])
            return [(clip.source_id, extract_complexity(clip, self.preset_value(options), options["crf"]))]
        return []

    def transcode_job(self, options, features) -> TranscodeJob:
        height = options["height"] or (int(features.height) if features else None)
        fps = options["fps"] or (features.frame_rate if features else None)
        duration = options["duration"]
        if duration is None and features:
            duration = features.n_frames / features.frame_rate
        if height is None or fps is None or duration is None:
            raise JobConfigError("pricing needs --duration, --height and --fps or a features row")
        return TranscodeJob(
            duration_seconds=duration,
            height=height,
            frame_rate=fps,
            codecs=tuple(options["codec"]),
            tier=options["tier"],
            region=options["region"],
            instance_class=options["instance"],
        )

    def pricing_table(self, job, options) -> PricingTable:
        path = options["pricing_table"] or job.pricing
        if not path:
            return PricingTable.default()
        return PricingTable.from_dict(read_json(path))

    def handle_predict(self, job, options):
        inputs = self.prediction_inputs(options)
        model = TimeModel.load(options["model"]) if options["model"] else None
        classifier = DurationClassifier.load(options["classifier"]) if options["classifier"] else None
        if model is None and not options["price"]:
            raise JobConfigError("predict needs --model or --price")
        if model is not None and not inputs:
            raise JobConfigError("prediction needs --features or --clip")
        pricing = self.pricing_table(job, options) if options["price"] else None

        rows = []
        for source_id, features in inputs or [("job", None)]:
            row = {"source_id": source_id}
            seconds = None
            if model is not None:
                seconds = predict_time(model, features)
                row["predicted_seconds"] = seconds
                self.stdout.write(f"{source_id}: predicted {seconds:.3f} s")
            if classifier is not None:
                row["duration_class"] = int(classifier.predict_bins([features])[0])
            if pricing is not None:
                estimate = estimate_cost(self.transcode_job(options, features), pricing, mode=options["price"], predicted_seconds=seconds)
                row["cost"] = estimate.to_dict()
                self.stdout.write(f"{source_id}: cost {estimate.currency} {money(estimate.total)} ({estimate.mode.value})")
            rows.append(row)

        manifest = self.start_manifest(job)
        manifest.add(write_json(manifest.output_dir / "prediction.json", {"kind": "time_prediction", "seed": job.seed, "rows": rows}))
        self.finish_manifest(manifest)
