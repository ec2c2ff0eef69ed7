from decouple import config

REDIS_HOST = config("REDIS_HOST", default="")
REDIS_URL = f"redis://{REDIS_HOST}:{config('REDIS_PORT', default='6379')}"

# Django Cache Configuration
CACHES = {
    "default": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "clipforge-default",
        "TIMEOUT": 3600,
    },
    # RD points keyed by (clip digest, profile, preset, qp, k)
    "encodes": {
        "BACKEND": "django.core.cache.backends.locmem.LocMemCache",
        "LOCATION": "clipforge-encodes",
        "TIMEOUT": None,
    },
}

if REDIS_HOST:
    CACHES["encodes"] = {
        "BACKEND": "django_redis.cache.RedisCache",
        "LOCATION": REDIS_URL + "/1",
        "OPTIONS": {
            "CLIENT_CLASS": "django_redis.client.DefaultClient",
            "SERIALIZER": "django_redis.serializers.json.JSONSerializer",
            "CONNECTION_POOL_KWARGS": {
                "max_connections": 20,
                "retry_on_timeout": True,
            },
        },
        "KEY_PREFIX": "clipforge",
        "TIMEOUT": None,  # RD points never go stale for a fixed encoder build
    }
