from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="RunRecord",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
                ("command", models.CharField(db_index=True, max_length=100)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("success", "Success"),
                            ("partial", "Partial failure"),
                            ("failed", "Failed"),
                        ],
                        db_index=True,
                        max_length=20,
                    ),
                ),
                ("seed", models.BigIntegerField(blank=True, null=True)),
                ("config", models.JSONField(blank=True, default=dict)),
                ("output_dir", models.CharField(blank=True, max_length=500)),
                ("error", models.TextField(blank=True)),
                (
                    "execution_time_ms",
                    models.PositiveIntegerField(blank=True, null=True),
                ),
            ],
            options={
                "db_table": "run_records",
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(fields=["command", "created_at"], name="run_records_command_7c1e2a_idx"),
                    models.Index(fields=["status", "created_at"], name="run_records_status_4b9d0f_idx"),
                ],
            },
        ),
    ]
