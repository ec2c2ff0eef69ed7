from django.apps import AppConfig


class PreprocOptConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.preproc_opt"
