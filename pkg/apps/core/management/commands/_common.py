"""Options and plumbing shared by the clipforge management commands."""

import time
from pathlib import Path
from typing import List, Optional

from django.conf import settings
from django.core.management.base import BaseCommand

from apps.core.artifacts import RunManifest
from apps.core.exceptions import JobConfigError
from apps.core.jobs import JobConfig


def float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise JobConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


class ClipforgeCommand(BaseCommand):
    """Adds --config/--workers/--seed/--output-dir and a run manifest."""

    command_name = "clipforge"

    def add_common_arguments(self, parser):
        parser.add_argument("--config", help="JSON job config; flags override it")
        parser.add_argument("--workers", type=int, default=None, help="worker pool size")
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--output-dir", default=None, help="directory for result files")

    def job_config(self, options) -> JobConfig:
        job = JobConfig.load(options["config"]) if options.get("config") else JobConfig.defaults()
        job = job.override(workers=options.get("workers"), seed=options.get("seed"), output_dir=options.get("output_dir"))
        self.run_seed = job.seed
        self.run_config = job.snapshot()
        return job

    def start_manifest(self, job: JobConfig, extra_config: Optional[dict] = None) -> RunManifest:
        output_dir = Path(job.output_dir or settings.CLIPFORGE["OUTPUT_DIR"])
        output_dir.mkdir(parents=True, exist_ok=True)
        self.run_output_dir = str(output_dir)
        self._started = time.perf_counter()
        return RunManifest(
            command=self.command_name,
            output_dir=output_dir,
            seed=job.seed,
            config={**job.snapshot(), **(extra_config or {})},
        )

    def finish_manifest(self, manifest: RunManifest) -> Path:
        return manifest.write(elapsed_seconds=round(time.perf_counter() - getattr(self, "_started", time.perf_counter()), 3))
