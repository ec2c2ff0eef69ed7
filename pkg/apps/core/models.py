import logging

from django.db import models

logger = logging.getLogger("clipforge.core")


class TimeStampedModel(models.Model):
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True


class RunRecord(TimeStampedModel):
    """One management-command invocation."""

    STATUS_SUCCESS = "success"
    STATUS_PARTIAL = "partial"
    STATUS_FAILED = "failed"
    STATUS_CHOICES = [
        (STATUS_SUCCESS, "Success"),
        (STATUS_PARTIAL, "Partial failure"),
        (STATUS_FAILED, "Failed"),
    ]

    command = models.CharField(max_length=100, db_index=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, db_index=True)
    seed = models.BigIntegerField(null=True, blank=True)
    config = models.JSONField(default=dict, blank=True)
    output_dir = models.CharField(max_length=500, blank=True)
    error = models.TextField(blank=True)
    execution_time_ms = models.PositiveIntegerField(null=True, blank=True)

    class Meta:
        db_table = "run_records"
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["command", "created_at"], name="run_records_command_7c1e2a_idx"),
            models.Index(fields=["status", "created_at"], name="run_records_status_4b9d0f_idx"),
        ]

    def __str__(self):
        return f"{self.command} {self.status} at {self.created_at}"

    @classmethod
    def log_run(cls, command, status, seed=None, config=None, output_dir="", error="", execution_time_ms=None):
        """Record a run; database problems are logged and never fail the command."""
        try:
            return cls.objects.create(
                command=command,
                status=status,
                seed=seed,
                config=config or {},
                output_dir=str(output_dir or ""),
                error=str(error)[:10000],
                execution_time_ms=execution_time_ms,
            )
        except Exception as exc:
            logger.warning(f"could not record run of {command}: {exc}")
            return None
