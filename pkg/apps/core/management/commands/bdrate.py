from pathlib import Path

from apps.core.artifacts import write_json
from apps.core.decorators import log_run
from apps.metrics.bjontegaard import bd_rate, quality_overlap
from apps.metrics.serializers import load_rd_curve

from ._common import ClipforgeCommand


class Command(ClipforgeCommand):
    help = "BD-rate (%) of a test RD curve against a reference curve (CSV or JSON)"
    command_name = "bdrate"

    def add_arguments(self, parser):
        parser.add_argument("test_curve")
        parser.add_argument("reference_curve")
        parser.add_argument("--json", dest="json_path", default=None, help="report path (default <output-dir>/bdrate.json)")
        self.add_common_arguments(parser)

    @log_run("bdrate")
    def handle(self, *args, **options):
        job = self.job_config(options)
        test = load_rd_curve(options["test_curve"])
        reference = load_rd_curve(options["reference_curve"])
        value = bd_rate(test, reference)
        low, high = quality_overlap(test, reference)

        manifest = self.start_manifest(job)
        report_path = Path(options["json_path"]) if options["json_path"] else manifest.output_dir / "bdrate.json"
        manifest.add(
            write_json(
                report_path,
                {
                    "kind": "bdrate_report",
                    "test": str(options["test_curve"]),
                    "reference": str(options["reference_curve"]),
                    "metric": test.metric.value,
                    "bd_rate_pct": value,
                    "quality_overlap": [low, high],
                    "seed": job.seed,
                },
            )
        )
        self.finish_manifest(manifest)
        self.stdout.write(f"BD-rate: {value:.4f}%")
