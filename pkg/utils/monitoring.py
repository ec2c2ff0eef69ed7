import logging
import time
from functools import wraps

from django.core.cache import cache
from django.utils import timezone

logger = logging.getLogger("clipforge.monitoring")


class PipelineMonitor:
    @staticmethod
    def metrics_key(operation_name):
        return f"metrics:{operation_name}:{timezone.now().strftime('%Y-%m-%d-%H')}"

    @staticmethod
    def log_operation_performance(operation_name, execution_time, job_id=None):
        """Log one timed operation and add it to the hourly counters"""
        logger.info(
            f"Operation: {operation_name} | "
            f"Execution Time: {execution_time:.3f}s | "
            f"Job: {job_id or '-'}"
        )

        metrics_key = PipelineMonitor.metrics_key(operation_name)
        try:
            current_metrics = cache.get(metrics_key, {"count": 0, "total_time": 0.0})
            current_metrics["count"] += 1
            current_metrics["total_time"] += execution_time
            cache.set(metrics_key, current_metrics, timeout=3600)
        except Exception as e:
            logger.warning(f"Metrics cache error for {metrics_key}: {e}")

    @staticmethod
    def log_error(operation_name, error, job_id=None):
        logger.error(f"Error in {operation_name}: {error} | Job: {job_id or '-'}")

    @staticmethod
    def get_metrics(operation_name):
        return cache.get(PipelineMonitor.metrics_key(operation_name), {"count": 0, "total_time": 0.0})


def _job_id(args, kwargs):
    job_id = kwargs.get("job_id")
    if job_id:
        return job_id
    for arg in args:
        source_id = getattr(arg, "source_id", None)
        if source_id:
            return source_id
    return None


def monitor_performance(operation_name, min_log_time=0.001):
    """Decorator timing a pipeline operation; fast calls are not logged"""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            job_id = _job_id(args, kwargs)

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                PipelineMonitor.log_error(operation_name, e, job_id)
                raise

            execution_time = time.perf_counter() - start_time
            if execution_time >= min_log_time:
                PipelineMonitor.log_operation_performance(operation_name, execution_time, job_id)
            return result

        return wrapper

    return decorator
