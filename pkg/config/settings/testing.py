"""
Test settings for the clipforge project.
Optimized for fast test execution.
"""

import os
import tempfile

from .base import *

# Testing flags
DEBUG = False
TESTING = True

# Use fast SQLite database for testing
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
        "TEST": {
            "NAME": ":memory:",
        },
    }
}

# Disable logging during tests to reduce noise
LOGGING_CONFIG = None
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "handlers": {
        "null": {
            "class": "logging.NullHandler",
        },
    },
    "root": {
        "handlers": ["null"],
    },
    "loggers": {
        "django": {
            "handlers": ["null"],
            "propagate": False,
        },
        "clipforge": {
            "handlers": ["null"],
            "propagate": True,
        },
    },
}

# Local memory caches only; no Redis in tests
CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "test-default",
    },
    "encodes": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "test-encodes",
    },
}

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    # django_redis left out for tests
] + LOCAL_APPS

# Scratch space for encoder subprocesses
CLIPFORGE = {
    **CLIPFORGE,
    "TMPDIR": os.path.join(tempfile.gettempdir(), "clipforge-test"),
    "WORKERS": 1,
    "OUTPUT_DIR": os.path.join(tempfile.gettempdir(), "clipforge-test-out"),
    "DEFAULT_SEED": 0,
    "ENCODE_CACHE_ENABLED": False,
}

SECRET_KEY = "django-insecure-test-key-only-for-testing-do-not-use-in-production"

USE_TZ = True
TIME_ZONE = "UTC"
