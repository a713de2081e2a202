"""Streaming substrate: l0-samplers, sparsifiers, cost estimation, space metering.

Space is accounted in machine words (8 bytes). Every structure that holds
algorithm state reports its word count to a :class:`SpaceMeter`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ._random import derive_seed, mix64_array
from .exceptions import ContractError, UnsupportedModeError
from .graph import DELETE, NEG, EdgeUpdate

FP_PRIME = (1 << 31) - 1
_P = np.int64(FP_PRIME)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_FP_SALT = np.uint64(0xD1B54A32D192ED03)


# --- space accounting ------------------------------------------------------

class SpaceMeter:
    """Word-level accounting with a global and a per-phase peak."""

    def __init__(self):
        self.components: dict[str, int] = {}
        self.words_current = 0
        self.words_peak = 0
        self.rows: list[tuple[str, int]] = []
        self._phase: str | None = None
        self._phase_peak = 0

    def set(self, name: str, words: int) -> None:
        if words < 0:
            raise ContractError("word counts are non-negative")
        self.words_current += words - self.components.get(name, 0)
        self.components[name] = words
        self.words_peak = max(self.words_peak, self.words_current)
        self._phase_peak = max(self._phase_peak, self.words_current)

    def add(self, name: str, words: int) -> None:
        self.set(name, self.components.get(name, 0) + words)

    def release(self, name: str) -> None:
        self.set(name, 0)

    def phase(self, name: str) -> None:
        """Close the current phase (recording its peak) and open ``name``."""
        self._close()
        self._phase = name
        self._phase_peak = self.words_current

    def finish(self) -> None:
        self._close()
        self._phase = None

    def _close(self) -> None:
        if self._phase is not None:
            self.rows.append((self._phase, self._phase_peak))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["phase", "words_peak"])
            w.writerows(self.rows)


# --- l0 sampling -------------------------------------------------------------

def repetitions_for(delta: float) -> int:
    """Independent repetitions so that the failure rate stays below ``delta``.

    A single repetition fails with probability at most about 1/3.
    """
    if not (0.0 < delta < 1.0):
        raise ContractError(f"delta must lie in (0, 1), got {delta}")
    return max(1, math.ceil(math.log(delta) / math.log(1.0 / 3.0) - 1e-12))


def levels_for(universe: int) -> int:
    return max(1, math.ceil(math.log2(max(universe, 2)))) + 1


class L0SamplerBank:
    """Rows of independent l0-samplers over the index universe ``[0, universe)``.

    Row ``r`` holds ``counts[r]`` samplers, each with ``reps`` repetitions
    over ``levels`` subsampling levels. Index ``i`` belongs to level ``j`` iff
    the hashed depth of ``i`` is at least ``j``. The state keeps, per depth
    bucket, the sum of deltas, the index-weighted sum and a fingerprint
    modulo the Mersenne prime ``2**31 - 1``; level cells are suffix sums of
    buckets. All three quantities are linear in the update stream.
    """

    def __init__(self, universe: int, counts, delta: float = 0.1, seed: int = 0):
        self.universe = int(universe)
        self.counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        self.reps = repetitions_for(delta)
        self.levels = levels_for(self.universe)
        self.seed = int(seed)
        self.s0: list[np.ndarray] = []
        self.s1: list[np.ndarray] = []
        self.fp: list[np.ndarray] = []
        self.seeds: list[np.ndarray] = []
        self.fseeds: list[np.ndarray] = []
        for r, cnt in enumerate(self.counts.tolist()):
            rows = cnt * self.reps
            base = np.uint64(derive_seed(self.seed, r))
            s = mix64_array(base + np.arange(rows, dtype=np.uint64) * _GOLDEN)
            self.seeds.append(s)
            self.fseeds.append(mix64_array(s ^ _FP_SALT))
            self.s0.append(np.zeros((rows, self.levels), dtype=np.int64))
            self.s1.append(np.zeros((rows, self.levels), dtype=np.int64))
            self.fp.append(np.zeros((rows, self.levels), dtype=np.int64))

    @property
    def words_per_sampler(self) -> int:
        return 3 * self.levels * self.reps + 1

    def words(self) -> int:
        return int(self.counts.sum()) * self.words_per_sampler

    def row_words(self, row: int) -> int:
        return int(self.counts[row]) * self.words_per_sampler

    def _fingerprint(self, row: int, index) -> np.ndarray:
        seeds = self.fseeds[row]
        index = np.asarray(index, dtype=np.uint64)
        if index.ndim == 2:
            seeds = seeds[:, None]
        h = mix64_array(seeds ^ index)
        return (h % np.uint64(FP_PRIME)).astype(np.int64)

    def _depth(self, row: int, index) -> np.ndarray:
        seeds = self.seeds[row]
        index = np.asarray(index, dtype=np.uint64)
        if index.ndim == 2:
            seeds = seeds[:, None]
        x = mix64_array(seeds ^ index)
        tz = np.bitwise_count((x & (~x + np.uint64(1))) - np.uint64(1)).astype(np.int64)
        return np.minimum(tz, self.levels - 1)

    def update(self, row: int, index: int, delta: int = 1) -> None:
        self.update_many(row, [index], [delta])

    def update_many(self, row: int, indices, deltas) -> None:
        """Apply several ``(index, delta)`` updates to one row at once.

        The state is linear, so this equals applying them one by one.
        """
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        dl = np.asarray(deltas, dtype=np.int64).reshape(-1)
        if len(idx) and (idx.min() < 0 or idx.max() >= self.universe):
            raise ContractError(f"index outside universe {self.universe}")
        if self.counts[row] == 0 or len(idx) == 0:
            return
        rows = len(self.seeds[row])
        L = self.levels
        depth = self._depth(row, idx[None, :])
        cell = (np.arange(rows)[:, None] * L + depth).ravel()
        size = rows * L
        w = np.broadcast_to(dl[None, :], depth.shape).ravel().astype(float)
        self.s0[row] += np.bincount(cell, w, size).astype(np.int64).reshape(rows, L)
        w1 = np.broadcast_to((dl * idx)[None, :], depth.shape).ravel().astype(float)
        self.s1[row] += np.bincount(cell, w1, size).astype(np.int64).reshape(rows, L)
        h = self._fingerprint(row, idx[None, :])
        wf = (h * dl[None, :]).ravel().astype(float)
        add = np.bincount(cell, wf, size).astype(np.int64).reshape(rows, L)
        fp = self.fp[row]
        fp[:] = (fp + add) % _P

    def _levels(self, row: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s0 = np.cumsum(self.s0[row][:, ::-1], axis=1)[:, ::-1]
        s1 = np.cumsum(self.s1[row][:, ::-1], axis=1)[:, ::-1]
        fp = self.fp[row].copy()
        for j in range(self.levels - 2, -1, -1):
            fp[:, j] = (fp[:, j] + fp[:, j + 1]) % _P
        return s0, s1, fp

    def sample(self, row: int) -> tuple[np.ndarray, np.ndarray]:
        """One draw per sampler of ``row``: (indices, values); index -1 means FAIL.

        Each repetition inspects its deepest non-empty level and succeeds if
        that level is one-sparse; a sampler returns its first successful
        repetition.
        """
        cnt = int(self.counts[row])
        if cnt == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        s0, s1, fp = self._levels(row)
        nz = s0 != 0
        has = nz.any(axis=1)
        deepest = self.levels - 1 - np.argmax(nz[:, ::-1], axis=1)
        ar = np.arange(len(s0))
        val = s0[ar, deepest]
        sm = s1[ar, deepest]
        fv = fp[ar, deepest]
        idx = np.full(len(s0), -1, dtype=np.int64)
        safe = np.where(has, val, 1)
        whole = has & (sm % safe == 0)
        cand = np.where(whole, sm // safe, -1)
        ok = whole & (cand >= 0) & (cand < self.universe)
        if ok.any():
            h = self._fingerprint(row, np.clip(cand, 0, None))
            expect = (val % _P) * h % _P
            ok &= fv == expect
            idx[ok] = cand[ok]
        idx = idx.reshape(cnt, self.reps)
        val = val.reshape(cnt, self.reps)
        got = idx >= 0
        first = np.argmax(got, axis=1)
        ok = got.any(axis=1)
        out_idx = np.where(ok, idx[np.arange(cnt), first], -1)
        out_val = np.where(ok, val[np.arange(cnt), first], 0)
        return out_idx, out_val

    def is_empty(self, row: int) -> bool:
        return not bool((self.s0[row].sum(axis=1) != 0).any())

    def state(self, row: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.s0[row].copy(), self.s1[row].copy(), self.fp[row].copy()

    def drop(self, row: int) -> None:
        """Free the samplers of ``row`` (after post-processing)."""
        empty = np.zeros((0, self.levels), dtype=np.int64)
        self.s0[row] = self.s1[row] = self.fp[row] = empty
        self.counts[row] = 0


class L0Sampler:
    """A single l0-sampler over ``[0, universe)``."""

    def __init__(self, universe: int, delta: float = 0.1, seed: int = 0):
        self._bank = L0SamplerBank(universe, [1], delta=delta, seed=seed)

    @property
    def delta_reps(self) -> int:
        return self._bank.reps

    def words(self) -> int:
        return self._bank.words()

    def update(self, index: int, delta: int = 1) -> None:
        self._bank.update(0, index, delta)

    def sample(self) -> int | None:
        """A uniform support index, or ``None`` for FAIL (including the empty vector)."""
        idx, _ = self._bank.sample(0)
        return None if idx[0] < 0 else int(idx[0])

    def is_empty(self) -> bool:
        return self._bank.is_empty(0)

    def state(self):
        return self._bank.state(0)


def l0_update(s: L0Sampler, index: int, delta: int) -> None:
    s.update(index, delta)


def l0_sample(s: L0Sampler) -> int | None:
    return s.sample()


# --- sparsifiers -------------------------------------------------------------

@dataclass
class SparsifierGraph:
    """Reweighted positive subgraph ``H+``."""

    n: int
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epsilon: float = 0.0

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.edges) != len(self.weights):
            raise ContractError("one weight per edge")
        if len(self.weights) and (self.weights <= 0).any():
            raise ContractError("sparsifier weights must be positive")

    @classmethod
    def from_graph(cls, g) -> "SparsifierGraph":
        return cls(g.n, g.pos_array.copy(), np.ones(len(g.pos_array)), 0.0)

    @property
    def m(self) -> int:
        return len(self.edges)

    def words(self) -> int:
        return 3 * self.m

    def total_weight(self) -> float:
        return float(self.weights.sum())


def cut_weight(h: SparsifierGraph, a) -> float:
    """Total weight of edges with exactly one endpoint in ``a``."""
    if h.m == 0:
        return 0.0
    inside = np.zeros(h.n, dtype=bool)
    inside[np.asarray(list(a), dtype=np.int64)] = True
    crossing = inside[h.edges[:, 0]] != inside[h.edges[:, 1]]
    return float(h.weights[crossing].sum())


def laplacian_pinv(n: int, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    lap = np.zeros((n, n))
    if len(edges):
        u, v = edges[:, 0], edges[:, 1]
        np.add.at(lap, (u, v), -weights)
        np.add.at(lap, (v, u), -weights)
        np.add.at(lap, (u, u), weights)
        np.add.at(lap, (v, v), weights)
    return np.linalg.pinv(lap, hermitian=True)


def _components(n: int, edges: np.ndarray) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    adj = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(adj, directed=False)[1]


def effective_resistances(n: int, edges, weights, pairs) -> np.ndarray:
    """Effective resistance for each pair; ``inf`` across components."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pinv = laplacian_pinv(n, edges, weights)
    a, b = pairs[:, 0], pairs[:, 1]
    r = pinv[a, a] + pinv[b, b] - 2.0 * pinv[a, b]
    comp = _components(n, edges)
    r = np.where(comp[a] == comp[b], np.maximum(r, 0.0), np.inf)
    return np.where(a == b, 0.0, r)


def effective_resistance(graph, u: int, v: int) -> float:
    """``graph`` is a :class:`SparsifierGraph`, a ``SignedGraph`` (unit ``G+``) or ``(n, edges, weights)``."""
    if isinstance(graph, tuple):
        n, edges, weights = graph
    elif isinstance(graph, SparsifierGraph):
        n, edges, weights = graph.n, graph.edges, graph.weights
    else:
        n, edges = graph.n, graph.pos_array
        weights = np.ones(len(edges))
    return float(effective_resistances(n, edges, weights, [(u, v)])[0])


class StreamingSparsifier:
    """Insertion-only merge-and-reduce sparsifier of the positive subgraph.

    ``exact`` keeps every edge with unit weight. ``sampled`` buffers edges;
    whenever the buffer outgrows ``ceil(C * n * ln n / eps^2)`` it is merged
    into the current sparsifier and every edge is resampled with probability
    ``min(1, C * ln n * w * R / eps^2)``, reweighted by ``1 / p``.
    """

    def __init__(self, n: int, epsilon: float = 0.2, seed: int = 0, mode: str = "sampled",
                 C: float = 8.0):
        if mode not in ("exact", "sampled"):
            raise ContractError(f"unknown sparsifier mode {mode!r}")
        if not epsilon > 0:
            raise ContractError("epsilon must be positive")
        self.n, self.epsilon, self.mode, self.C = int(n), float(epsilon), mode, float(C)
        self.rng = np.random.default_rng(derive_seed(int(seed), 0x5A5A))
        self.log_n = math.log(max(self.n, 2))
        self.threshold = math.ceil(self.C * self.n * self.log_n / self.epsilon ** 2)
        self.edges = np.zeros((0, 2), dtype=np.int64)
        self.weights = np.zeros(0)
        self.buffer: list[tuple[int, int]] = []
        self.words_peak = 0
        self.reductions = 0

    def words(self) -> int:
        return 3 * (len(self.edges) + len(self.buffer))

    def add(self, u: int, v: int, delta: int = 1) -> None:
        if delta != 1:
            raise UnsupportedModeError("the insertion-only sparsifier cannot process deletions")
        if u == v:
            raise ContractError(f"self-loop on {u}")
        self.buffer.append((u, v) if u < v else (v, u))
        self.words_peak = max(self.words_peak, self.words())
        if self.mode == "sampled" and len(self.buffer) > self.threshold:
            self._reduce()

    def _merge(self) -> tuple[np.ndarray, np.ndarray]:
        buf = np.array(self.buffer, dtype=np.int64).reshape(-1, 2)
        edges = np.concatenate([self.edges, buf])
        weights = np.concatenate([self.weights, np.ones(len(buf))])
        self.buffer = []
        if not len(edges):
            return edges, weights
        keys = edges[:, 0] * self.n + edges[:, 1]
        uniq, inv = np.unique(keys, return_inverse=True)
        w = np.zeros(len(uniq))
        np.add.at(w, inv, weights)
        e = np.stack([uniq // self.n, uniq % self.n], axis=1)
        return e, w

    def _reduce(self) -> None:
        edges, weights = self._merge()
        if len(edges):
            r = effective_resistances(self.n, edges, weights, edges)
            p = np.minimum(1.0, self.C * self.log_n * weights * r / self.epsilon ** 2)
            keep = self.rng.random(len(edges)) < p
            edges, weights = edges[keep], weights[keep] / p[keep]
        self.edges, self.weights = edges, weights
        self.reductions += 1

    def finalize(self) -> SparsifierGraph:
        if self.mode == "sampled":
            self._reduce()
        else:
            self.edges, self.weights = self._merge()
        eps = 0.0 if self.mode == "exact" else self.epsilon
        return SparsifierGraph(self.n, self.edges.copy(), self.weights.copy(), eps)


def build_sparsifier(pos_edge_stream, epsilon: float = 0.2, seed: int = 0,
                     mode: str = "sampled", n: int | None = None, C: float = 8.0) -> SparsifierGraph:
    """Sparsify an insertion-only stream of positive edges.

    Items are ``EdgeUpdate`` records (negative-sign items are skipped) or
    plain ``(u, v)`` pairs.
    """
    items = list(pos_edge_stream)
    pairs = []
    for it in items:
        if isinstance(it, EdgeUpdate):
            if it.delta == DELETE:
                raise UnsupportedModeError("the insertion-only sparsifier cannot process deletions")
            if it.sign == NEG:
                continue
            pairs.append((it.u, it.v))
        else:
            pairs.append((int(it[0]), int(it[1])))
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=-1)
    sp = StreamingSparsifier(n, epsilon, seed, mode, C)
    for u, v in pairs:
        sp.add(u, v)
    return sp.finalize()


# --- cost estimation ---------------------------------------------------------

def estimated_cost(h: SparsifierGraph, pos_degrees, labels, clamp: bool = False) -> float:
    """Sparsifier-based estimate of the clustering cost on a complete graph.

    Per cluster ``C``: ``boundary_H(C) + |C|(|C|-1)/2 - (1/2) * sum of deg+``.
    Exact when ``h`` holds every positive edge with unit weight.
    """
    labels = np.asarray(labels)
    deg = np.asarray(pos_degrees, dtype=float)
    if len(labels) != h.n or len(deg) != h.n:
        raise ContractError("labels and degrees must cover every vertex")
    crossing = 0.0
    if h.m:
        cross = labels[h.edges[:, 0]] != labels[h.edges[:, 1]]
        crossing = float(h.weights[cross].sum())
    _, sizes = np.unique(labels, return_counts=True)
    pairs = float((sizes * (sizes - 1) // 2).sum())
    est = 2.0 * crossing + pairs - 0.5 * float(deg.sum())
    return max(0.0, est) if clamp else est
