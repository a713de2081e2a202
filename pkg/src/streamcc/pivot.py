"""Offline pivot algorithms for complete graphs.

Each routine returns a label array. Randomized joins draw coins from a
flipper addressed by ``(earlier vertex, later vertex)`` so that algorithms
which are equivalent under shared randomness produce identical outputs when
given the same seed.

Threshold comparisons are evaluated as products against
``K = (c / eps) * n * ln n``:

* ``u`` is uninteresting iff ``deg(u) * rank(u) >= K``;
* pivot ``v`` is eligible for uninteresting ``u`` iff ``rank(v) * deg(u) < K``;
* at iteration ``t`` an unclustered ``v`` turns singleton iff ``deg(v) * t >= K``.

Vertices of degree zero are never truncated.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from ._random import as_flipper, derive_seed
from .exceptions import ContractError, ParameterError
from .graph import RandomPermutation, SignedGraph
from .predictor import DEFAULT_ROUNDING, DistanceOracle, RoundingParams, round_probability

COIN_KEY = 0xC011


def coin_seed(seed) -> int:
    """Seed of the join coins derived from an algorithm seed."""
    return derive_seed(0 if seed is None else int(seed), COIN_KEY)


def _flipper(seed, flipper):
    return flipper if flipper is not None else as_flipper(coin_seed(seed))


@dataclass(frozen=True)
class TruncationThresholds:
    n: int
    epsilon: float = 0.2
    c: float = 4.0

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.25):
            raise ParameterError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if not self.c > 0:
            raise ParameterError(f"c must be positive, got {self.c}")

    @property
    def K(self) -> float:
        return (self.c / self.epsilon) * self.n * math.log(self.n) if self.n > 1 else 0.0

    def tau(self, deg: int) -> float:
        return math.inf if deg == 0 else self.K / deg

    def sigma(self, rank: int) -> float:
        return self.K / rank

    def ell(self, t: int) -> float:
        return self.K / t

    def uninteresting(self, deg: int, rank: int) -> bool:
        return deg > 0 and deg * rank >= self.K

    def eligible(self, pivot_rank: int, deg: int) -> bool:
        return deg == 0 or pivot_rank * deg < self.K

    def singleton_at(self, deg: int, t: int) -> bool:
        return deg > 0 and deg * t >= self.K

    def uninteresting_mask(self, degrees, perm: RandomPermutation) -> np.ndarray:
        deg = np.asarray(degrees, dtype=np.int64)
        return (deg > 0) & (deg * perm.rank >= self.K)


@dataclass
class StoredGraph:
    """What the post-processing phase knows about ``G+``.

    ``adj[u]`` lists recovered positive neighbours of interesting ``u``
    (including uninteresting neighbours); it is empty for uninteresting
    vertices.
    """

    n: int
    degrees: np.ndarray
    interesting: np.ndarray
    adj: list = field(default_factory=list)

    def edge_count(self) -> int:
        seen = set()
        for u, nb in enumerate(self.adj):
            for v in nb:
                seen.add((u, v) if u < v else (v, u))
        return len(seen)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u] or u in self.adj[v]


def store_from_graph(g: SignedGraph, perm: RandomPermutation, thr: TruncationThresholds) -> StoredGraph:
    """Exact store: every positive edge incident to an interesting vertex."""
    deg = g.pos_degrees.copy()
    interesting = ~thr.uninteresting_mask(deg, perm)
    adj = [set(g.pos_adj[u]) if interesting[u] else set() for u in range(g.n)]
    return StoredGraph(g.n, deg, interesting, adj)


def check_store(g: SignedGraph, store: StoredGraph) -> None:
    if store.n != g.n:
        raise ContractError("stored graph and G+ disagree on n")
    for u in range(g.n):
        if not store.interesting[u]:
            continue
        extra = store.adj[u] - g.pos_adj[u]
        if extra:
            raise ContractError(f"stored edge ({u}, {min(extra)}) is not a positive edge of G+")
        missing = {v for v in g.pos_adj[u] if store.interesting[v]} - store.adj[u]
        if missing:
            raise ContractError(f"stored graph is not induced: edge ({u}, {min(missing)}) missing")


def _finish(labels: np.ndarray, next_label: int) -> np.ndarray:
    for v in np.flatnonzero(labels < 0).tolist():
        labels[v] = next_label
        next_label += 1
    return labels


def truncated_pivot(g_plus: SignedGraph | None, g_store: StoredGraph, perm: RandomPermutation,
                    thr: TruncationThresholds) -> np.ndarray:
    """Pivot on the interesting vertices, then attach uninteresting ones."""
    if g_plus is not None:
        check_store(g_plus, g_store)
    n = g_store.n
    labels = np.full(n, -1, dtype=np.int64)
    interesting = g_store.interesting
    pivots = []
    for u in perm.order.tolist():
        if not interesting[u] or labels[u] >= 0:
            continue
        labels[u] = u
        pivots.append(u)
        for v in g_store.adj[u]:
            if interesting[v] and labels[v] < 0:
                labels[v] = u
    deg = g_store.degrees
    for v in pivots:
        rv = int(perm.rank[v])
        for u in sorted(g_store.adj[v]):
            if not interesting[u] and labels[u] < 0 and thr.eligible(rv, int(deg[u])):
                labels[u] = v
    return _finish(labels, n)


def _p(oracle: DistanceOracle, positive: bool, u: int, v: int, params: RoundingParams) -> float:
    return round_probability(1 if positive else -1, oracle.query(u, v), params)


def truncated_pivot_pred(g_plus: SignedGraph | None, g_store: StoredGraph, perm: RandomPermutation,
                         oracle: DistanceOracle, thr: TruncationThresholds,
                         params: RoundingParams = DEFAULT_ROUNDING, seed=0, flipper=None) -> np.ndarray:
    """Prediction-guided variant: joins happen with probability ``1 - p_uv``."""
    if g_plus is not None:
        check_store(g_plus, g_store)
    flip = _flipper(seed, flipper)
    n = g_store.n
    labels = np.full(n, -1, dtype=np.int64)
    interesting = g_store.interesting
    order = perm.order.tolist()
    pivots = []
    open_set = [u for u in order if interesting[u]]
    while open_set:
        u = open_set[0]
        labels[u] = u
        pivots.append(u)
        rest = []
        for v in open_set[1:]:
            if flip.flip(u, v, 1.0 - _p(oracle, v in g_store.adj[u], u, v, params)):
                labels[v] = u
            else:
                rest.append(v)
        open_set = rest
    deg = g_store.degrees
    for u in order:
        if interesting[u]:
            continue
        du = int(deg[u])
        for v in pivots:
            if not thr.eligible(int(perm.rank[v]), du):
                break
            if flip.flip(v, u, 1.0 - _p(oracle, u in g_store.adj[v], v, u, params)):
                labels[u] = v
                break
    return _finish(labels, n)


def _singleton_times(degrees: np.ndarray, thr: TruncationThresholds, n: int) -> list[int]:
    """First iteration at which each vertex would be truncated (``n + 1`` if never)."""
    out = []
    for d in degrees.tolist():
        if d == 0:
            out.append(n + 1)
            continue
        t = max(1, math.ceil(thr.K / d))
        while t > 1 and thr.singleton_at(d, t - 1):
            t -= 1
        while not thr.singleton_at(d, t):
            t += 1
        out.append(min(t, n + 1))
    return out


def _cklpu_core(g: SignedGraph, perm: RandomPermutation, thr: TruncationThresholds, join) -> np.ndarray:
    n = g.n
    labels = np.full(n, -1, dtype=np.int64)
    times = _singleton_times(g.pos_degrees, thr, n)
    by_time: dict[int, list[int]] = {}
    for v, t in enumerate(times):
        by_time.setdefault(t, []).append(v)
    order = perm.order.tolist()
    unclustered = set(range(n))
    next_single = n
    for t in range(1, n + 1):
        for v in by_time.get(t, ()):
            if v in unclustered:
                labels[v] = next_single
                next_single += 1
                unclustered.discard(v)
        u = order[t - 1]
        if u not in unclustered:
            continue
        labels[u] = u
        unclustered.discard(u)
        for v in join(u, unclustered):
            labels[v] = u
            unclustered.discard(v)
    return _finish(labels, next_single)


def cklpu_pivot(g: SignedGraph, perm: RandomPermutation, thr: TruncationThresholds) -> np.ndarray:
    """Pivot in rank order while truncating high-degree vertices to singletons."""
    def join(u, unclustered):
        return [v for v in g.pos_adj[u] if v in unclustered]

    return _cklpu_core(g, perm, thr, join)


def pairwise_diss(g: SignedGraph, perm: RandomPermutation, oracle: DistanceOracle,
                  thr: TruncationThresholds, params: RoundingParams = DEFAULT_ROUNDING,
                  seed=0, flipper=None) -> np.ndarray:
    flip = _flipper(seed, flipper)
    rank = perm.rank

    def join(u, unclustered):
        adj = g.pos_adj[u]
        return [v for v in sorted(unclustered, key=lambda x: rank[x])
                if flip.flip(u, v, 1.0 - _p(oracle, v in adj, u, v, params))]

    return _cklpu_core(g, perm, thr, join)


def classic_pivot(g: SignedGraph, perm: RandomPermutation) -> np.ndarray:
    """The untruncated pivot algorithm."""
    n = g.n
    labels = np.full(n, -1, dtype=np.int64)
    for u in perm.order.tolist():
        if labels[u] >= 0:
            continue
        labels[u] = u
        for v in g.pos_adj[u]:
            if labels[v] < 0:
                labels[v] = u
    return labels


def _check_k(k: int) -> None:
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")


def _cm_core(n: int, perm: RandomPermutation, k: int, pivot_join, touch) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    counters = np.zeros(n, dtype=np.int64)
    unclustered = set(range(n))
    next_single = n
    for w in perm.order.tolist():
        if w in unclustered:
            labels[w] = w
            unclustered.discard(w)
            for v in pivot_join(w, unclustered):
                labels[v] = w
                unclustered.discard(v)
        else:
            for v in touch(w, unclustered):
                counters[v] += 1
                if counters[v] == k:
                    labels[v] = next_single
                    next_single += 1
                    unclustered.discard(v)
    return labels


def cm_pivot(g: SignedGraph, k: int, perm: RandomPermutation) -> np.ndarray:
    """Pivot with per-vertex counters; ``k`` non-pivot neighbours force a singleton."""
    _check_k(k)

    def nbrs(w, unclustered):
        return [v for v in sorted(g.pos_adj[w]) if v in unclustered]

    return _cm_core(g.n, perm, k, nbrs, nbrs)


def pairwise_diss2(g: SignedGraph, oracle: DistanceOracle, k: int, perm: RandomPermutation,
                   params: RoundingParams = DEFAULT_ROUNDING, seed=0, flipper=None) -> np.ndarray:
    _check_k(k)
    flip = _flipper(seed, flipper)
    rank = perm.rank

    def coins(w, unclustered):
        adj = g.pos_adj[w]
        return [v for v in sorted(unclustered, key=lambda x: rank[x])
                if flip.flip(w, v, 1.0 - _p(oracle, v in adj, w, v, params))]

    return _cm_core(g.n, perm, k, coins, coins)


def preround(g: SignedGraph, oracle: DistanceOracle, perm: RandomPermutation | None = None,
             params: RoundingParams = DEFAULT_ROUNDING, seed=0, flipper=None) -> SignedGraph:
    """Sample ``G'``: each pair becomes positive with probability ``1 - p_uv``.

    The coin of a pair is keyed by (lower-rank vertex, higher-rank vertex).
    """
    flip = _flipper(seed, flipper)
    rank = perm.rank if perm is not None else np.arange(1, g.n + 1)
    pos = []
    for u in range(g.n):
        adj = g.pos_adj[u]
        for v in range(u + 1, g.n):
            a, b = (u, v) if rank[u] < rank[v] else (v, u)
            if flip.flip(a, b, 1.0 - _p(oracle, v in adj, a, b, params)):
                pos.append((u, v))
    return SignedGraph(g.n, frozenset(pos), frozenset(), True)


def pairwise_diss2_preround(g: SignedGraph, oracle: DistanceOracle, k: int, perm: RandomPermutation,
                            params: RoundingParams = DEFAULT_ROUNDING, seed=0, flipper=None) -> np.ndarray:
    _check_k(k)
    return cm_pivot(preround(g, oracle, perm, params, seed, flipper), k, perm)


class BoundedQueue:
    """Rank-ordered set keeping the ``k`` lowest-rank members."""

    __slots__ = ("k", "_keys", "_members")

    def __init__(self, k: int, owner: int | None = None, owner_rank: int | None = None):
        self.k = k
        self._keys: list[tuple[int, int]] = []
        self._members: set[int] = set()
        if owner is not None:
            self.add(owner, owner_rank)

    def add(self, v: int, rank: int) -> int | None:
        """Insert ``v``; returns the evicted vertex, if any."""
        if v in self._members:
            return None
        if len(self._keys) >= self.k and rank > self._keys[-1][0]:
            return v
        bisect.insort(self._keys, (int(rank), v))
        self._members.add(v)
        if len(self._keys) > self.k:
            _, out = self._keys.pop()
            self._members.discard(out)
            return out
        return None

    def __contains__(self, v) -> bool:
        return v in self._members

    def __len__(self) -> int:
        return len(self._keys)

    def __iter__(self):
        return (v for _, v in self._keys)

    def members(self) -> list[int]:
        return [v for _, v in self._keys]


def cluster_from_queues(vertices, perm: RandomPermutation, queues, k: int | None = None) -> np.ndarray:
    """Assign each vertex, in rank order, to the lowest-rank pivot in its queue.

    ``queues[u]`` is an iterable of vertices. An owner may be missing from its
    own queue only if it was evicted by ``k`` lower-rank entries.
    """
    verts = list(vertices)
    n = len(verts)
    if sorted(verts) != list(range(n)):
        raise ContractError("vertices must be 0..n-1")
    rank = perm.rank
    labels = np.full(n, -1, dtype=np.int64)
    is_pivot = np.zeros(n, dtype=bool)
    next_single = n
    for u in perm.order.tolist():
        q = sorted(queues[u], key=lambda x: rank[x])
        if u not in q and (k is None or len(q) < k):
            raise ContractError(f"vertex {u} is missing from its own queue")
        target = None
        for v in q:
            if v == u or is_pivot[v]:
                target = v
                break
        if target is None:
            labels[u] = next_single
            next_single += 1
        elif target == u:
            is_pivot[u] = True
            labels[u] = u
        else:
            labels[u] = labels[target]
    return labels
