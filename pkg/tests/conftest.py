import itertools
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from streamcc.graph import SignedGraph  # noqa: E402


def random_complete(n: int, rng, density: float | None = None) -> SignedGraph:
    q = rng.uniform(0.2, 0.8) if density is None else density
    pos = [e for e in itertools.combinations(range(n), 2) if rng.random() < q]
    return SignedGraph(n, frozenset(pos), frozenset(), True)


def random_general(n: int, rng, q: float = 0.6) -> SignedGraph:
    pos, neg = [], []
    for e in itertools.combinations(range(n), 2):
        if rng.random() < q:
            (pos if rng.random() < 0.5 else neg).append(e)
    return SignedGraph(n, frozenset(pos), frozenset(neg), False)


@pytest.fixture
def g3() -> SignedGraph:
    """Path 0-1-2 with the pair (0, 2) negative, in complete mode."""
    return SignedGraph(3, frozenset({(0, 1), (1, 2)}), frozenset(), True)


@pytest.fixture
def g3_general() -> SignedGraph:
    return SignedGraph(3, frozenset({(0, 1), (1, 2)}), frozenset({(0, 2)}), False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_metric(n: int, rng, kind: int) -> np.ndarray:
    """Distance matrix in [0, 1] satisfying the triangle inequality.

    kind 0: scaled Euclidean points, 1: noisy clustering, 2: shortest paths.
    """
    from scipy.sparse.csgraph import shortest_path

    if kind == 0:
        x = rng.random((n, 2))
        d = np.minimum(1.0, rng.uniform(0.5, 3.0) * np.linalg.norm(x[:, None] - x[None], axis=2))
    elif kind == 1:
        lab = rng.integers(0, rng.integers(1, 6), n)
        e = rng.uniform(0, 0.45)
        d = np.where(lab[:, None] == lab[None], e, 1 - e)
    else:
        w = rng.random((n, n)) * rng.uniform(0.1, 1.0)
        d = np.minimum(1.0, shortest_path((w + w.T) / 2))
    np.fill_diagonal(d, 0.0)
    return d


def graph_from_metric(d: np.ndarray, rng, q: float | None = None) -> SignedGraph:
    """General graph whose pairs appear w.p. ``q`` and are positive w.p. ``1 - d``."""
    n = len(d)
    q = rng.uniform(0.3, 1.0) if q is None else q
    pos, neg = [], []
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < q:
            (pos if rng.random() < 1 - d[u, v] else neg).append((u, v))
    return SignedGraph(n, frozenset(pos), frozenset(neg), False)


def pytest_terminal_summary(terminalreporter):
    from _verdicts import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
