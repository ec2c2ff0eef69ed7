import functools
import time

from django.core.management.base import CommandError

from apps.core.exceptions import ClipforgeError, JobConfigError

EXIT_PARTIAL = 1
EXIT_USAGE = 2


def log_run(command_name):
    """
    Decorator for a management command's handle() that records a RunRecord.

    The command may set `run_seed`, `run_config`, `run_output_dir` and
    `run_status` on itself while it runs; they are copied into the record. Toolkit errors
    that escape handle() become CommandError: JobConfigError exits 2, any
    other ClipforgeError exits 1.

    Usage:
        @log_run("bdrate")
        def handle(self, *args, **options):
            ...
    """

    def decorator(handle):
        @functools.wraps(handle)
        def wrapper(self, *args, **options):
            from apps.core.models import RunRecord

            start_time = time.perf_counter()
            status, error = RunRecord.STATUS_SUCCESS, ""
            try:
                result = handle(self, *args, **options)
                status = getattr(self, "run_status", None) or RunRecord.STATUS_SUCCESS
                return result
            except JobConfigError as e:
                status, error = RunRecord.STATUS_FAILED, str(e)
                raise CommandError(str(e), returncode=EXIT_USAGE) from e
            except ClipforgeError as e:
                status, error = RunRecord.STATUS_FAILED, str(e)
                raise CommandError(str(e), returncode=EXIT_PARTIAL) from e
            except CommandError as e:
                status = RunRecord.STATUS_PARTIAL if e.returncode == EXIT_PARTIAL else RunRecord.STATUS_FAILED
                error = str(e)
                raise
            except Exception as e:
                status, error = RunRecord.STATUS_FAILED, f"{type(e).__name__}: {e}"
                raise
            finally:
                RunRecord.log_run(
                    command=command_name,
                    status=status,
                    seed=getattr(self, "run_seed", None),
                    config=getattr(self, "run_config", None),
                    output_dir=getattr(self, "run_output_dir", ""),
                    error=error,
                    execution_time_ms=int((time.perf_counter() - start_time) * 1000),
                )

        return wrapper

    return decorator
