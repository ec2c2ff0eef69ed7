import logging
import re
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Union

from django.core.management.base import CommandError

from apps.codec_gateway.domain import SyntheticCodecSpec
from apps.codec_gateway.gateway import ExternalGateway, SyntheticGateway
from apps.codec_gateway.profiles import load_profile
from apps.core.artifacts import write_csv
from apps.core.decorators import EXIT_PARTIAL, log_run
from apps.core.exceptions import ClipforgeError, JobConfigError
from apps.core.worker_pool import run_keyed
from apps.lambda_opt.domain import EarlyStop, LambdaSearchConfig, ProxyStrategy
from apps.lambda_opt.features import first_pass_features
from apps.lambda_opt.predictor import KPredictor, predict_k, train_k_predictor
from apps.lambda_opt.proxy import optimize_with_proxy
from apps.lambda_opt.reports import outcome_rows, write_outcome, write_summary
from apps.lambda_opt.search import optimize_k
from apps.video_io.domain import Clip, ClipMeta
from apps.video_io.y4m import read_y4m

from ._common import ClipforgeCommand

logger = logging.getLogger("clipforge.lambda_opt")

CLIP_SPEC = re.compile(r"^(?P<name>[^:]+)(:(?P<w>\d+)x(?P<h>\d+)(x(?P<n>\d+))?)?$")
DEFAULT_SYNTHETIC_SHAPE = (1920, 1080, 60)


def synthetic_clip_meta(spec: str) -> ClipMeta:
    """'name', 'name:WxH' or 'name:WxHxFRAMES' at 30 fps."""
    match = CLIP_SPEC.match(spec)
    if not match:
        raise JobConfigError(f"cannot read synthetic clip spec {spec!r}")
    width, height, frames = DEFAULT_SYNTHETIC_SHAPE
    if match.group("w"):
        width, height = int(match.group("w")), int(match.group("h"))
    if match.group("n"):
        frames = int(match.group("n"))
    return ClipMeta(width, height, frames, Fraction(30, 1), match.group("name"))


class Command(ClipforgeCommand):
    help = "Per-clip search for the Lagrangian multiplier scale k"
    command_name = "optimize_lambda"

    def add_arguments(self, parser):
        parser.add_argument("clips", nargs="*", help="Y4M files, or name[:WxH[xFRAMES]] with --synthetic")
        parser.add_argument("--synthetic", action="store_true", help="use the analytic codec")
        parser.add_argument("--planted-k", type=float, nargs="+", default=None)
        parser.add_argument("--gamma", type=float, default=None)
        parser.add_argument("--jitter", type=float, default=None, help="log-normal rate/time noise of the analytic codec")
        parser.add_argument("--proxy-drift", type=float, default=None, help="k* scale seen by proxy encodes")
        parser.add_argument("--profile", default=None, help="encoder profile for real encodes")
        parser.add_argument("--dims", type=int, choices=[1, 2], default=None)
        parser.add_argument("--proxy", choices=[p.value for p in ProxyStrategy], default=None)
        parser.add_argument("--metric", choices=["PSNR", "MS-SSIM"], default=None)
        parser.add_argument("--x-tol", type=float, default=None)
        parser.add_argument("--max-iter", type=int, default=None)
        parser.add_argument("--budget", type=int, default=None, help="encode budget per clip")
        parser.add_argument("--predictor", default=None, help="k predictor JSON; predict k from a first pass instead of searching")
        parser.add_argument("--train-predictor", action="store_true", help="fit a k predictor on the searched clips")
        self.add_common_arguments(parser)

    def search_config(self, job, options, n_clips: int = 1) -> LambdaSearchConfig:
        values = {k: v for k, v in job.lambda_search.items() if k not in ("early_stop", "synthetic")}
        early = dict(job.lambda_search.get("early_stop", {}))
        if options["budget"] is not None:
            early["encode_budget"] = options["budget"]
        for key in ("dims", "proxy", "metric", "x_tol", "max_iter"):
            if options.get(key) is not None:
                values[key] = options[key]
        if "k_bounds" in values:
            values["k_bounds"] = tuple(values["k_bounds"])
        if options["synthetic"] and "dims" not in values:
            values["dims"] = min(len(options["planted_k"] or [2.0]), 2)
        # clips already run in parallel; the QP sweep of each one gets its share of the pool
        values.setdefault("workers", max(1, job.workers // max(1, n_clips)))
        try:
            return LambdaSearchConfig(early_stop=EarlyStop(**early), **values)
        except TypeError as exc:
            raise JobConfigError(f"invalid lambda_search config: {exc}") from exc

    def synthetic_spec(self, job, options) -> SyntheticCodecSpec:
        settings_block = dict(job.lambda_search.get("synthetic", {}))
        return SyntheticCodecSpec(
            k_star=tuple(options["planted_k"] or settings_block.get("k_star", (2.0,))),
            gamma=options["gamma"] if options["gamma"] is not None else settings_block.get("gamma", 0.5),
            noise_std_log=options["jitter"] if options["jitter"] is not None else settings_block.get("noise_std_log", 0.0),
            proxy_k_drift=options["proxy_drift"] if options["proxy_drift"] is not None else settings_block.get("proxy_k_drift", 1.0),
            seed=job.seed,
        )

    def predict(self, model, gateways, clips, config, job, manifest):
        def run(source_id):
            features = first_pass_features(gateways[source_id], clips[source_id])
            return predict_k(model, features, config.k_bounds)

        rows = []
        for result in run_keyed([(sid, (lambda s=sid: run(s))) for sid in sorted(clips)], job.workers):
            if result.ok:
                rows.append({"source_id": result.key, "k_predicted": result.value})
            else:
                manifest.fail(result.key, result.error)
        if rows:
            manifest.add(write_csv(manifest.output_dir / "predicted_k.csv", rows))
        self.finish_manifest(manifest)

        for row in rows:
            self.stdout.write(f"{row['source_id']}: predicted k={row['k_predicted']:.4g}")
        if not rows:
            raise CommandError("every clip failed", returncode=EXIT_PARTIAL)
        if manifest.failures:
            self.run_status = "partial"

    @log_run("optimize_lambda")
    def handle(self, *args, **options):
        if not options["clips"]:
            raise JobConfigError("no clips given")
        if options["predictor"] and not Path(options["predictor"]).is_file():
            raise JobConfigError(f"k predictor {options['predictor']} not found")
        job = self.job_config(options)

        clips: Dict[str, Union[Clip, ClipMeta]] = {}
        paths: Dict[str, Path] = {}
        for item in options["clips"]:
            path = Path(item)
            if path.suffix.lower() == ".y4m" and path.exists():
                clip = read_y4m(path)
                paths[clip.source_id] = path
                clips[clip.source_id] = clip.meta if options["synthetic"] else clip
            elif options["synthetic"]:
                meta = synthetic_clip_meta(item)
                clips[meta.source_id] = meta
            else:
                raise JobConfigError(f"clip file {item} not found (pass --synthetic for analytic clips)")

        if options["synthetic"]:
            spec = self.synthetic_spec(job, options)
            encoder_name = "synthetic"
            gateways = {
                sid: SyntheticGateway(replace(spec, native_height=meta.height)) for sid, meta in clips.items()
            }
        else:
            profile_name = options["profile"] or (job.profiles[0] if job.profiles else None)
            if not profile_name:
                raise JobConfigError("real encodes need --profile or a profile in the job config")
            profile = load_profile(profile_name)
            encoder_name = profile.name
            shared = ExternalGateway(profile)
            for sid, clip in clips.items():
                shared.register(clip, paths[sid])
            gateways = {sid: shared for sid in clips}

        config = self.search_config(job, options, len(clips))
        if not options["synthetic"]:
            config = replace(config, frame_groups=profile.frame_groups)
        manifest = self.start_manifest(job, {"search": {"dims": config.dims, "proxy": config.proxy.value, "metric": config.metric.value}})

        if options["predictor"]:
            try:
                return self.predict(KPredictor.load(options["predictor"]), gateways, clips, config, job, manifest)
            finally:
                for gateway in set(gateways.values()):
                    gateway.close()

        def run(source_id):
            gateway = gateways[source_id]
            clip = clips[source_id]
            features = first_pass_features(gateway, clip) if options["train_predictor"] else None
            if config.proxy is ProxyStrategy.NONE:
                return optimize_k(gateway, clip, config), features
            return optimize_with_proxy(gateway, clip, config), features

        try:
            results = run_keyed([(sid, (lambda s=sid: run(s))) for sid in sorted(clips)], job.workers)
        finally:
            for gateway in set(gateways.values()):
                gateway.close()

        outcomes, dataset = [], []
        for result in results:
            if result.ok:
                outcome, features = result.value
                outcomes.append(outcome)
                if features is not None:
                    dataset.append((features, outcome.k_opt[0]))
                manifest.add(write_outcome(manifest.output_dir / "outcomes" / f"{result.key}.json", outcome, job.seed))
            else:
                manifest.fail(result.key, result.error)

        tuning = f"{config.dims}-D {config.metric.value} proxy={config.proxy.value}"
        if outcomes:
            manifest.add(write_csv(manifest.output_dir / "outcomes.csv", outcome_rows(outcomes)))
            manifest.add(write_summary(manifest.output_dir / "summary.csv", outcomes, encoder_name, tuning))
        if options["train_predictor"]:
            try:
                model = train_k_predictor(dataset, forest_params=job.predictor, seed=job.seed)
                manifest.add(model.save(manifest.output_dir / "k_predictor.json"))
            except ClipforgeError as exc:
                logger.warning(f"k predictor not trained: {exc}")
                manifest.fail("k_predictor", exc)
        self.finish_manifest(manifest)

        for outcome in outcomes:
            k_text = ", ".join(f"{k:.4g}" for k in outcome.k_opt)
            self.stdout.write(f"{outcome.source_id}: k=({k_text}) BD-rate {outcome.bd_rate_gain:.3f}% after {outcome.iterations} evaluations")
        failed: List[str] = [f["item"] for f in manifest.failures]
        if failed and not outcomes:
            raise CommandError(f"every clip failed: {', '.join(failed)}", returncode=EXIT_PARTIAL)
        if failed:
            self.run_status = "partial"
            self.stderr.write(f"{len(failed)} item(s) failed: {', '.join(failed)}")
