from django.apps import AppConfig


class LoadPredictConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.load_predict"
