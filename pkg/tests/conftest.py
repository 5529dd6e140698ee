import os

import pytest
from mpmath import mp

from quelab.store import ProfileStore

# Shared on-disk cache so repeated test runs (and the acceptance sweep)
# reuse eigenbases and norms; cold runs simply rebuild it.
CACHE_DIR = os.environ.get(
    "QUELAB_TEST_CACHE_DIR", os.path.join(os.path.dirname(__file__), "..", ".quelab_cache")
)


@pytest.fixture(autouse=True)
def _default_precision():
    old = mp.prec
    mp.prec = 256
    yield
    mp.prec = old


@pytest.fixture(scope="session")
def store():
    return ProfileStore(256, cache_dir=CACHE_DIR, jobs=2)


@pytest.fixture(scope="session")
def basis12(store):
    return store.basis(12, ncoeffs=120)


@pytest.fixture(scope="session")
def basis24(store):
    return store.basis(24, ncoeffs=120)


@pytest.fixture(scope="session")
def profile12(store):
    store.basis(12, ncoeffs=120)
    return store.profile(12, 1)


@pytest.fixture(scope="session")
def profiles24(store):
    store.basis(24, ncoeffs=120)
    return store.profile(24, 1), store.profile(24, 2)
