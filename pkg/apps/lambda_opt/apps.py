from django.apps import AppConfig


class LambdaOptConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.lambda_opt"
