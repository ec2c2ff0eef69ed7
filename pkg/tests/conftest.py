import numpy as np
import pytest
from django.core.cache import caches

pytest_plugins = ["pytest_django"]


@pytest.fixture
def output_dir(tmp_path, settings):
    """Point every command's default output directory at a temp path."""
    out = tmp_path / "out"
    settings.CLIPFORGE = {**settings.CLIPFORGE, "OUTPUT_DIR": str(out)}
    return out


@pytest.fixture
def encode_cache_enabled(settings):
    settings.CLIPFORGE = {**settings.CLIPFORGE, "ENCODE_CACHE_ENABLED": True}
    caches["encodes"].clear()
    yield
    caches["encodes"].clear()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mid_gray_clip():
    from tests.factories import ConstantClipFactory

    return ConstantClipFactory(width=256, height=256, n_frames=10, value=128)
