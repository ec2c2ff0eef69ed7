from django.apps import AppConfig


class VideoIoConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.video_io"
