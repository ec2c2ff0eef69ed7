from pathlib import Path

import pandas as pd

from apps.core.artifacts import atomic_write_bytes
from apps.core.decorators import log_run
from apps.core.plotting import PLOTS, render_svg, sweep_figure

from ._common import ClipforgeCommand


class Command(ClipforgeCommand):
    help = "Render an RD, sweep or complexity-scatter CSV to a deterministic SVG"
    command_name = "plot"

    def add_arguments(self, parser):
        parser.add_argument("kind", choices=sorted(PLOTS))
        parser.add_argument("inputs", nargs="+", help="CSV files; several RD curves become one series each")
        parser.add_argument("--output", default=None, help="SVG path (default <output-dir>/<kind>.svg)")
        parser.add_argument("--psnr-level", type=float, default=None, help="sweep degradation level to draw")
        self.add_common_arguments(parser)

    def read_frame(self, kind, inputs) -> pd.DataFrame:
        frames = []
        for path in inputs:
            frame = pd.read_csv(path)
            if kind == "rd" and len(inputs) > 1 and "series" not in frame.columns:
                frame["series"] = Path(path).stem
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    @log_run("plot")
    def handle(self, *args, **options):
        job = self.job_config(options)
        kind = options["kind"]
        frame = self.read_frame(kind, options["inputs"])
        if kind == "sweep":
            fig = sweep_figure(frame, psnr_level=options["psnr_level"])
        else:
            fig = PLOTS[kind](frame)

        manifest = self.start_manifest(job, {"kind": kind, "inputs": sorted(str(p) for p in options["inputs"])})
        output = Path(options["output"]) if options["output"] else manifest.output_dir / f"{kind}.svg"
        manifest.add(atomic_write_bytes(output, render_svg(fig)))
        self.finish_manifest(manifest)
        self.stdout.write(f"wrote {output}")
