from pathlib import Path

import pandas as pd

from apps.codec_gateway.profiles import load_profile
from apps.core.artifacts import write_csv, write_json
from apps.core.decorators import log_run
from apps.core.exceptions import JobConfigError
from apps.preproc_opt.policy import StrengthPolicy, fit_policy, optimal_strength, read_table, write_table
from apps.preproc_opt.sweep import ExternalBitrateEncoder, SweepGrid, SweepResult, argmax_strengths, run_sweep, toy_encoder
from apps.preproc_opt.wiener import wiener3d_denoise
from apps.video_io.patterns import textured_clip
from apps.video_io.y4m import read_y4m, write_y4m_file

from ._common import ClipforgeCommand, float_list

ACTIONS = ("sweep", "fit", "apply")


class Command(ClipforgeCommand):
    help = "Pre-processor calibration: sweep | fit | apply"
    command_name = "preproc"

    def add_arguments(self, parser):
        parser.add_argument("action", choices=ACTIONS)
        # sweep
        parser.add_argument("--clips", nargs="*", default=[], help="clean Y4M sources")
        parser.add_argument("--synthetic-clips", type=int, default=0, help="add N generated 128x128x12 clips")
        parser.add_argument("--psnr-levels", type=float_list, default=None)
        parser.add_argument("--bitrates", type=float_list, default=None)
        parser.add_argument("--strengths", type=float_list, default=None)
        parser.add_argument("--encoder", default="toy", help="'toy' or a profile with a {BITRATE} placeholder")
        # fit
        parser.add_argument("--sweep", dest="sweep_csv", default=None, help="sweep CSV to fit")
        parser.add_argument("--table", default=None, help="argmax CSV (sigma, bitrate, strength) to fit")
        parser.add_argument("--s-max", type=float, default=None)
        # apply
        parser.add_argument("--policy", default=None)
        parser.add_argument("--sigma", type=float, default=None)
        parser.add_argument("--rate", type=float, default=None)
        parser.add_argument("--input", default=None, help="Y4M to denoise")
        parser.add_argument("--output", default=None, help="denoised Y4M path")
        self.add_common_arguments(parser)

    @log_run("preproc")
    def handle(self, *args, **options):
        job = self.job_config(options)
        getattr(self, f"handle_{options['action']}")(job, options)

    def sweep_grid(self, job, options) -> SweepGrid:
        base = SweepGrid.default()
        configured = job.sweep_grid
        return SweepGrid(
            psnr_levels=options["psnr_levels"] or configured.get("psnr_levels", base.psnr_levels),
            bitrates=options["bitrates"] or configured.get("bitrates", base.bitrates),
            strengths=options["strengths"] or configured.get("strengths", base.strengths),
        )

    def handle_sweep(self, job, options):
        clips = [read_y4m(path) for path in options["clips"]]
        clips += [textured_clip(seed=job.seed + i, source_id=f"textured{i}") for i in range(options["synthetic_clips"])]
        if not clips:
            raise JobConfigError("sweep needs --clips or --synthetic-clips")
        encoder = toy_encoder if options["encoder"] == "toy" else ExternalBitrateEncoder(load_profile(options["encoder"]))
        grid = self.sweep_grid(job, options)

        manifest = self.start_manifest(job, {"grid": {k: list(v) for k, v in vars(grid).items()}})
        result = run_sweep(clips, grid, encoder=encoder, seed=job.seed, workers=job.workers)
        manifest.add(write_csv(manifest.output_dir / "sweep.csv", result.to_frame()))
        table = argmax_strengths(result)
        manifest.add(write_table(manifest.output_dir / "argmax.csv", table))
        for hole in result.holes:
            manifest.fail(f"psnr={hole[0]:g} bitrate={hole[1]:g} strength={hole[2]:g}", RuntimeError("cell failed"))
        self.finish_manifest(manifest)
        self.stdout.write(f"{len(result.cells)} cells, {len(result.holes)} holes, {len(table)} argmax rows")
        if result.holes:
            self.run_status = "partial"

    def handle_fit(self, job, options):
        if options["table"]:
            table = read_table(options["table"])
        elif options["sweep_csv"]:
            table = argmax_strengths(SweepResult.from_frame(pd.read_csv(options["sweep_csv"]), source=options["sweep_csv"]))
        else:
            raise JobConfigError("fit needs --table or --sweep")
        s_max = options["s_max"] if options["s_max"] is not None else max((row[2] for row in table), default=0.0)
        policy = fit_policy(table, s_max)

        manifest = self.start_manifest(job)
        manifest.add(policy.save(manifest.output_dir / "policy.json"))
        manifest.add(
            write_json(
                manifest.output_dir / "fit_report.json",
                {"kind": "policy_fit_report", "entries": len(table), "residual_rmse": policy.residual_rmse, "seed": job.seed},
            )
        )
        self.finish_manifest(manifest)
        self.stdout.write(f"residual RMSE: {policy.residual_rmse:.3e}")

    def handle_apply(self, job, options):
        if not options["policy"] or options["sigma"] is None or options["rate"] is None:
            raise JobConfigError("apply needs --policy, --sigma and --rate")
        policy = StrengthPolicy.load(options["policy"])
        strength = optimal_strength(policy, options["sigma"], options["rate"])
        self.stdout.write(f"strength: {strength:.6g}")
        if options["input"]:
            if not options["output"]:
                raise JobConfigError("--input needs --output")
            write_y4m_file(Path(options["output"]), wiener3d_denoise(read_y4m(options["input"]), strength))
