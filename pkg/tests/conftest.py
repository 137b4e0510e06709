import numpy as np
import pytest

from phsar import _backend


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = _backend.get(request.param)
    monkeypatch.setattr(_backend, "kernels", mod)
    return mod


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    from corpus import write_corpus

    return write_corpus(tmp_path_factory.mktemp("corpus"))
