import hashlib
import logging
from typing import Dict, Optional, Sequence

from django.conf import settings
from django.core.cache import caches

logger = logging.getLogger("clipforge.codec_gateway")


class EncodeCacheService:
    """RD-point cache: (clip digest, profile, preset, qp, k) -> (rate, quality, time).

    Cache failures degrade to a miss; they never fail an encode.
    """

    def __init__(self, cache_name: str = "encodes"):
        self.cache_name = cache_name
        self.timeout = settings.CLIPFORGE.get("ENCODE_CACHE_TIMEOUT")

    @property
    def enabled(self) -> bool:
        return bool(settings.CLIPFORGE.get("ENCODE_CACHE_ENABLED", False))

    def generate_key(self, clip_digest: str, profile: str, preset: Optional[str], qp: float, k_vector: Sequence[float]) -> str:
        k_str = ",".join(f"{k:.9g}" for k in k_vector)
        key_string = f"rd:{clip_digest}:{profile}:{preset}:{qp:g}:{k_str}"
        return hashlib.md5(key_string.encode()).hexdigest()

    def get_point(self, key: str) -> Optional[Dict]:
        try:
            return caches[self.cache_name].get(key)
        except Exception as e:
            logger.warning(f"Cache get error for key {key}: {e}")
            return None

    def set_point(self, key: str, point: Dict) -> bool:
        try:
            caches[self.cache_name].set(key, point, self.timeout)
            return True
        except Exception as e:
            logger.warning(f"Cache set error for key {key}: {e}")
            return False

    def clear(self) -> bool:
        try:
            caches[self.cache_name].clear()
            return True
        except Exception as e:
            logger.warning(f"Cache clear error: {e}")
            return False


def clip_digest(clip) -> str:
    """Content digest of a clip's samples and frame rate."""
    h = hashlib.blake2b(digest_size=16)
    h.update(f"{clip.width}x{clip.height}@{clip.frame_rate_ratio}".encode())
    for frame in clip.frames:
        for plane in frame.planes:
            h.update(plane.tobytes())
    return h.hexdigest()


encode_cache = EncodeCacheService()
