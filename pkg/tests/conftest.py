import numpy as np
import pytest

from fxstrings.ingest import TickSeries


def lnlinear(n, b, p0=1.3):
    return p0 * np.exp(b * np.arange(n))


def random_walk(rng, n, sigma=1e-3, p0=1.3):
    return p0 * np.exp(np.cumsum(rng.normal(0.0, sigma, n)))


def random_quotes(rng, n, sigma=1e-3, spread=2e-4):
    mid = random_walk(rng, n, sigma)
    half = spread * rng.uniform(0.0, 1.0, n) / 2
    return mid + half, mid - half


def uniform_ticks(n, dt_ms=1000, p=1.0):
    t = np.arange(n, dtype=np.int64) * dt_ms
    return TickSeries(t, np.full(n, p), np.full(n, p))


@pytest.fixture
def rng():
    return np.random.default_rng(20090801)
