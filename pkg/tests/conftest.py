import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fairclust.geometry import Dataset
from fairclust.matroid import PartitionMatroid
from fairclust.matroid_fl import FLInstance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_dataset(rng: np.random.Generator, n: int, dim: int = 2, weights: bool = False) -> Dataset:
    w = rng.integers(1, 4, n).astype(float) if weights else None
    return Dataset(range(n), coords=rng.random((n, dim)), weights=w)


def random_fl_instance(rng: np.random.Generator, nf=(2, 9), nc=(1, 9), p=None, costs=True) -> FLInstance:
    """Random planar instance with a random partition matroid (caps >= 1)."""
    nf = int(rng.integers(*nf))
    nc = int(rng.integers(*nc))
    p = float(rng.choice([1, 1.5, 2, 3])) if p is None else float(p)
    lab = rng.integers(0, int(rng.integers(1, 4)), nf)
    parts = [q for q in ([i for i in range(nf) if lab[i] == j] for j in range(3)) if q]
    caps = [int(rng.integers(1, len(q) + 1)) for q in parts]
    opening = rng.random(nf) * rng.choice([0.0, 0.3, 2.0]) if costs else np.zeros(nf)
    demand = rng.integers(0, 3, nc).astype(float)
    demand[rng.integers(nc)] = 1.0
    return FLInstance.from_coordinates(rng.random((nf, 2)), rng.random((nc, 2)), opening, demand, p,
                                       PartitionMatroid(parts, caps))


def random_ring_instance(rng: np.random.Generator, n=(5, 12)) -> FLInstance:
    """Sites co-located on a noisy circle with two capped parts; these LPs are
    fractional far more often than uniform planar ones."""
    n = int(rng.integers(*n))
    t = np.sort(rng.random(n)) * 2 * np.pi
    xy = np.c_[np.cos(t), np.sin(t)] + rng.normal(0, 0.05, (n, 2))
    p = float(rng.choice([1, 1.5, 2, 3]))
    lab = rng.integers(0, 2, n)
    parts = [q for q in ([i for i in range(n) if lab[i] == j] for j in range(2)) if q]
    caps = [int(rng.integers(1, max(2, len(q) // 2 + 1))) for q in parts]
    opening = rng.random(n) * rng.choice([0.0, 0.2])
    return FLInstance.from_coordinates(xy, xy, opening, np.ones(n), p, PartitionMatroid(parts, caps))


@st.composite
def datasets(draw, min_n=1, max_n=10, dim=2):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_dataset(np.random.default_rng(seed), n, dim)


@st.composite
def fl_instances(draw, nf=(2, 8), nc=(1, 8), p=None):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_fl_instance(np.random.default_rng(seed), nf, nc, p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_clusters() -> Dataset:
    """Two far-apart tight triangles."""
    pts = [(0, 0), (1, 0), (0, 1), (100, 100), (101, 100), (100, 101)]
    return Dataset(range(6), coords=np.array(pts, dtype=float))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
