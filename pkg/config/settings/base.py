"""
Django settings for the clipforge project.

clipforge has no web surface; Django provides settings, the ORM-backed run
log, the cache framework and the management-command CLI.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import tempfile
from pathlib import Path

from decouple import config

from .cache import *

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

SECRET_KEY = config(
    "SECRET_KEY", default="django-insecure-clipforge-local-only-do-not-deploy"
)

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

LOCAL_APPS = [
    "apps.core",
    "apps.video_io",
    "apps.metrics",
    "apps.optimizers",
    "apps.codec_gateway",
    "apps.lambda_opt",
    "apps.preproc_opt",
    "apps.load_predict",
]

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django_redis",
] + LOCAL_APPS


# Database
# The run log defaults to a local SQLite file; production points at PostgreSQL.

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": config("CLIPFORGE_DB_PATH", default=str(BASE_DIR / "clipforge.sqlite3")),
    }
}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

TIME_ZONE = "UTC"

USE_TZ = True


# Toolkit configuration

CLIPFORGE = {
    "TOOL_VERSION": "1.0.0",
    "SCHEMA_VERSION": 1,
    "TMPDIR": config("CLIPFORGE_TMPDIR", default=tempfile.gettempdir()),
    "WORKERS": config("CLIPFORGE_WORKERS", default=1, cast=int),
    "OUTPUT_DIR": config("CLIPFORGE_OUTPUT_DIR", default="clipforge-out"),
    "DEFAULT_SEED": config("CLIPFORGE_SEED", default=0, cast=int),
    "ENCODE_CACHE_ENABLED": config("CLIPFORGE_ENCODE_CACHE", default=False, cast=bool),
    "ENCODE_CACHE_TIMEOUT": 7 * 24 * 3600,
}

X264_BIN = config("X264_BIN", default="x264")
X264_LAMBDA_BIN = config("X264_LAMBDA_BIN", default=X264_BIN)
X265_BIN = config("X265_BIN", default="x265")
AOMENC_BIN = config("AOMENC_BIN", default="aomenc")
SVTAV1_BIN = config("SVTAV1_BIN", default="SvtAv1EncApp")
FFMPEG_BIN = config("FFMPEG_BIN", default="ffmpeg")

_DECODE_TO_Y4M = f"{FFMPEG_BIN} -loglevel error -y -i {{INPUT}} -f yuv4mpegpipe -pix_fmt yuv420p {{OUTPUT}}"

# Encoder command templates and QP sets as used for per-clip lambda tuning.
# {K1}/{K2} are only honoured by encoder builds that expose a lambda scale.
ENCODER_PROFILES = {
    "x264": {
        "command_template": f"{X264_BIN} --threads 1 --preset {{PRESET}} --crf {{QP}} --output {{OUTPUT}} {{INPUT}}",
        "qp_list": [22, 27, 32, 37, 42],
        "frame_groups": ["ALL"],
        "preset_ladder": [
            "ultrafast", "superfast", "veryfast", "faster", "fast",
            "medium", "slow", "slower", "veryslow",
        ],
        "default_preset": "medium",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".264",
    },
    # --pass 1 --stats makes x264 write per-frame bits and QP; first-pass
    # features and --train-predictor need them.
    "x264-stats": {
        "command_template": (
            f"{X264_BIN} --threads 1 --preset {{PRESET}} --crf {{QP}} --pass 1 --stats {{STATS}} "
            "--output {OUTPUT} {INPUT}"
        ),
        "qp_list": [22, 27, 32, 37, 42],
        "frame_groups": ["ALL"],
        "preset_ladder": [
            "ultrafast", "superfast", "veryfast", "faster", "fast",
            "medium", "slow", "slower", "veryslow",
        ],
        "default_preset": "medium",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".264",
        "stats_format": "x264",
    },
    # Same, for x264 builds patched with a --lambda-scale option.
    "x264-lambda": {
        "command_template": (
            f"{X264_LAMBDA_BIN} --threads 1 --preset {{PRESET}} --crf {{QP}} --lambda-scale {{K1}} "
            "--pass 1 --stats {STATS} --output {OUTPUT} {INPUT}"
        ),
        "qp_list": [22, 27, 32, 37, 42],
        "frame_groups": ["ALL"],
        "preset_ladder": [
            "ultrafast", "superfast", "veryfast", "faster", "fast",
            "medium", "slow", "slower", "veryslow",
        ],
        "default_preset": "medium",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".264",
        "stats_format": "x264",
    },
    "x265": {
        "command_template": f"{X265_BIN} --pools 1 --preset {{PRESET}} --input {{INPUT}} --crf {{QP}} --output {{OUTPUT}}",
        "qp_list": [22, 27, 32, 37, 42],
        "frame_groups": ["ALL"],
        "preset_ladder": [
            "ultrafast", "superfast", "veryfast", "faster", "fast",
            "medium", "slow", "slower", "veryslow",
        ],
        "default_preset": "medium",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".hevc",
    },
    "libaom-av1": {
        "command_template": (
            f"{AOMENC_BIN} --cpu-used={{PRESET}} --passes=1 --lag-in-frames=19 --auto-alt-ref=1 "
            "--min-gf-interval=16 --max-gf-interval=16 --gf-min-pyr-height=4 --gf-max-pyr-height=4 "
            "--limit=130 --kf-min-dist=65 --kf-max-dist=65 --use-fixed-qp-offsets=1 --deltaq-mode=0 "
            "--enable-tpl-model=0 --end-usage=q --cq-level={QP} --enable-keyframe-filtering=0 "
            "--threads=1 --test-decode=fatal -o {OUTPUT} {INPUT}"
        ),
        "qp_list": [27, 39, 49, 59, 63],
        "frame_groups": ["KF", "GF/ARF"],
        "preset_ladder": ["6", "5", "4", "3", "2", "1", "0"],
        "default_preset": "0",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".ivf",
    },
    "svt-av1": {
        "command_template": f"{SVTAV1_BIN} --lp 1 --crf {{QP}} --preset {{PRESET}} -i {{INPUT}} -b {{OUTPUT}}",
        "qp_list": [27, 33, 39, 46, 52, 58],
        "frame_groups": ["GF/ARF", "INTER"],
        "preset_ladder": ["13", "12", "11", "10", "9", "8", "7", "6", "5", "4"],
        "default_preset": "9",
        "decode_command_template": _DECODE_TO_Y4M,
        "output_suffix": ".ivf",
    },
}

# Published per-minute output prices (USD), captured February 2023.
# Override with timepred --pricing-table or the job config "pricing" key.
PRICING_TABLE = {
    "currency": "USD",
    "captured": "2023-02",
    "per_minute_rates": [
        {"tier": "basic", "codec": "h264", "resolution": "HD", "framerate": "30", "region": "us-east-1", "rate": "0.015"},
        {"tier": "professional_speed", "codec": "h264", "resolution": "HD", "framerate": "30", "region": "us-east-1", "rate": "0.024"},
        {"tier": "professional_quality", "codec": "h264", "resolution": "HD", "framerate": "30", "region": "us-east-1", "rate": "0.042"},
        {"tier": "professional_speed", "codec": "h265", "resolution": "HD", "framerate": "30", "region": "us-east-1", "rate": "0.048"},
        {"tier": "professional_quality", "codec": "h265", "resolution": "HD", "framerate": "30", "region": "us-east-1", "rate": "0.33"},
    ],
    "compute_rates": {
        "lambda": "0.06",
        "fargate.1vcpu": "0.04656",
        "c5.large": "0.085",
    },
    "reserved_rates": {
        "us-east-1": "400",
    },
}


# Logging: toolkit loggers to the console at INFO

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "pipeline": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "pipeline",
        },
    },
    "loggers": {
        "clipforge": {
            "handlers": ["console"],
            "level": "INFO",
            "propagate": False,
        },
        "django": {
            "handlers": ["console"],
            "level": "WARNING",
        },
    },
}
