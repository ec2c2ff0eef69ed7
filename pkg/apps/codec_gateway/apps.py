from django.apps import AppConfig


class CodecGatewayConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.codec_gateway"
