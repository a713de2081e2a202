"""Single-pass streaming algorithms for complete graphs.

``dynamic_cc`` handles insertions and deletions of positive edges through
per-vertex l0-sampler banks; ``insertion_cc`` keeps two bounded neighbour
queues per vertex. Both produce a prediction-free and a prediction-guided
clustering and return the one with the lower estimated cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ._random import as_flipper, derive_seed
from .exceptions import ContractError, ParameterError, StreamIntegrityError, UnsupportedModeError
from .graph import DELETE, NEG, POS, EdgeUpdate, RandomPermutation, SignedGraph, replay_stream
from .pivot import (
    BoundedQueue,
    StoredGraph,
    TruncationThresholds,
    cluster_from_queues,
    coin_seed,
    store_from_graph,
    truncated_pivot,
    truncated_pivot_pred,
)
from .predictor import DEFAULT_ROUNDING, DistanceOracle, RoundingParams, round_probability
from .sketch import (
    L0SamplerBank,
    SpaceMeter,
    SparsifierGraph,
    StreamingSparsifier,
    build_sparsifier,
    estimated_cost,
)


@dataclass
class StreamReport:
    algo: str
    n: int
    seed: int
    chosen_branch: int
    est_cost_1: float
    est_cost_2: float
    words_peak: int
    labels_1: np.ndarray
    labels_2: np.ndarray
    concession_words: int = 0
    recovered_edges: int = 0
    recovery_complete: bool = True
    n_interesting: int = 0
    meter: SpaceMeter | None = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)


def _infer_n(updates: list[EdgeUpdate], n: int | None) -> int:
    top = 1 + max((max(u, v) for u, v, _, _ in updates), default=-1)
    if n is None:
        return top
    if top > n:
        raise ContractError(f"stream mentions vertex {top - 1} but n={n}")
    return n


def sampler_counts(perm: RandomPermutation, thr: TruncationThresholds, s_max: int | None) -> np.ndarray:
    """Samplers per vertex: ``ceil(10 c ln n * sigma_u)`` capped at ``s_max``."""
    n = perm.n
    if n < 2:
        return np.zeros(n, dtype=np.int64)
    log_n = math.log(n)
    cap = s_max if s_max is not None else math.ceil(64 * log_n)
    target = np.ceil(10.0 * thr.c * log_n * thr.K / perm.rank.astype(float))
    return np.maximum(1, np.minimum(target, cap)).astype(np.int64)


_FLUSH_EVERY = 4096


def _flush(bank: L0SamplerBank, pending: dict[int, list[tuple[int, int]]]) -> None:
    # Sketch state is linear, so per-row batches give the same result as
    # item-by-item updates.
    for row, items in pending.items():
        idx, dl = zip(*items)
        bank.update_many(row, idx, dl)
    pending.clear()


def _choose(est1: float, est2: float) -> int:
    return 1 if est1 <= est2 else 2


def recover_neighbors(bank: L0SamplerBank, row: int, degree: int) -> tuple[set[int], bool]:
    """Draw from every sampler of ``row`` and peel recovered indices until
    ``degree`` distinct neighbours are known or a round finds nothing new."""
    found: set[int] = set()
    while len(found) < degree:
        idx, val = bank.sample(row)
        fresh = []
        for i, x in zip(idx.tolist(), val.tolist()):
            if i < 0:
                continue
            if x != 1:
                raise StreamIntegrityError(f"vertex {row}: neighbour {i} has net multiplicity {x}")
            if i == row:
                raise StreamIntegrityError(f"vertex {row}: self-loop recovered")
            if i not in found:
                found.add(i)
                fresh.append(i)
        if not fresh:
            break
        bank.update_many(row, fresh, [-1] * len(fresh))
    return found, len(found) >= degree


def dynamic_cc(stream: Iterable[EdgeUpdate], oracle: DistanceOracle, epsilon: float = 0.2,
               c: float = 4.0, seed: int = 0, *, n: int | None = None,
               perm: RandomPermutation | None = None, params: RoundingParams = DEFAULT_ROUNDING,
               s_max: int | None = None, delta: float = 0.1, recovery: str = "sketch",
               sparsifier_mode: str = "exact", sparsifier_C: float = 8.0,
               sparsifier_epsilon: float | None = None,
               replay: Callable[..., SignedGraph] | None = None) -> tuple[np.ndarray, StreamReport]:
    """Dynamic-stream clustering of a complete graph given its positive edges.

    Negative-sign items are ignored (negatives are implicit). The cost
    estimator's sparsifier is built from the net positive edges returned by
    ``replay`` (default: :func:`replay_stream`); that storage is reported as
    ``concession_words`` and kept out of ``words_peak``. ``recovery="replay"``
    replaces sampler recovery with the exact incident edges, which couples
    the output to the offline pipeline.
    """
    if recovery not in ("sketch", "replay"):
        raise ParameterError(f"unknown recovery mode {recovery!r}")
    updates = list(stream)
    n = _infer_n(updates, n)
    seed = int(seed)
    thr = TruncationThresholds(n, epsilon, c)
    perm = perm if perm is not None else RandomPermutation.from_seed(n, seed)
    meter = SpaceMeter()

    meter.phase("preprocessing")
    meter.set("rank_degree", 2 * n)
    bank = None
    if recovery == "sketch":
        bank = L0SamplerBank(n, sampler_counts(perm, thr, s_max), delta=delta,
                             seed=derive_seed(seed, 0x10))
        meter.set("samplers", bank.words())
    deg = np.zeros(n, dtype=np.int64)

    meter.phase("streaming")
    pending: dict[int, list[tuple[int, int]]] = {}
    buffered = 0
    for i, (u, v, s, d) in enumerate(updates):
        if s != POS:
            continue
        if u == v:
            raise StreamIntegrityError(f"item {i}: self-loop on {u}")
        deg[u] += d
        deg[v] += d
        if deg[u] < 0 or deg[v] < 0:
            raise StreamIntegrityError(f"item {i}: positive degree below zero")
        if bank is not None:
            pending.setdefault(u, []).append((v, d))
            pending.setdefault(v, []).append((u, d))
            buffered += 2
            if buffered >= _FLUSH_EVERY:
                _flush(bank, pending)
                buffered = 0
    if bank is not None:
        _flush(bank, pending)

    replay = replay or replay_stream
    net = replay([x for x in updates if x.sign == POS], n=n, complete=True)
    if sparsifier_mode == "exact":
        h = SparsifierGraph.from_graph(net)
    else:
        h = build_sparsifier(net.pos_array.tolist(), sparsifier_epsilon or epsilon,
                             derive_seed(seed, 0x20), "sampled", n=n, C=sparsifier_C)
    concession = 2 * len(net.pos) + h.words()

    meter.phase("postprocessing")
    interesting = ~thr.uninteresting_mask(deg, perm)
    if recovery == "replay":
        if not np.array_equal(deg, net.pos_degrees):
            raise StreamIntegrityError("degree counters disagree with the replayed graph")
        store = store_from_graph(net, perm, thr)
        complete = True
        meter.set("store", 2 * store.edge_count())
    else:
        adj = [set() for _ in range(n)]
        complete = True
        stored = 0
        for u in perm.order.tolist():
            if interesting[u] and deg[u] > 0:
                found, ok = recover_neighbors(bank, u, int(deg[u]))
                complete &= ok
                adj[u] = found
                stored += len(found)
            meter.set("samplers", meter.components["samplers"] - bank.row_words(u))
            bank.drop(u)
            meter.set("store", 2 * stored)
        store = StoredGraph(n, deg.copy(), interesting, adj)
        meter.set("samplers", 0)
    meter.set("labels", 2 * n)
    c1 = truncated_pivot(None, store, perm, thr)
    c2 = truncated_pivot_pred(None, store, perm, oracle, thr, params, seed=seed)
    est1 = estimated_cost(h, deg, c1)
    est2 = estimated_cost(h, deg, c2)
    branch = _choose(est1, est2)
    meter.finish()
    report = StreamReport(
        algo="dynamic", n=n, seed=seed, chosen_branch=branch, est_cost_1=est1, est_cost_2=est2,
        words_peak=meter.words_peak, labels_1=c1, labels_2=c2, concession_words=concession,
        recovered_edges=store.edge_count(), recovery_complete=bool(complete),
        n_interesting=int(interesting.sum()), meter=meter,
    )
    return (c1 if branch == 1 else c2), report


def offline_pair(g: SignedGraph, oracle: DistanceOracle, perm: RandomPermutation,
                 thr: TruncationThresholds, params: RoundingParams = DEFAULT_ROUNDING,
                 seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Both clusterings of the offline pipeline that ``dynamic_cc`` simulates."""
    store = store_from_graph(g, perm, thr)
    return (truncated_pivot(g, store, perm, thr),
            truncated_pivot_pred(g, store, perm, oracle, thr, params, seed=seed))


def default_k(epsilon: float) -> int:
    return max(2, math.ceil(2.0 / epsilon))


def insertion_cc(stream: Iterable[EdgeUpdate], oracle: DistanceOracle, k: int | None = None,
                 epsilon: float = 0.2, seed: int = 0, *, n: int | None = None,
                 perm: RandomPermutation | None = None, params: RoundingParams = DEFAULT_ROUNDING,
                 sparsifier_mode: str = "exact", sparsifier_C: float = 8.0,
                 flipper=None) -> tuple[np.ndarray, StreamReport]:
    """Insertion-only clustering of a complete graph.

    The stream should carry every pair (positive and negative items); the
    prediction-guided queues admit any pair, so pairs that never arrive can
    never be admitted.
    """
    k = default_k(epsilon) if k is None else int(k)
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    updates = list(stream)
    n = _infer_n(updates, n)
    seed = int(seed)
    perm = perm if perm is not None else RandomPermutation.from_seed(n, seed)
    rank = perm.rank
    flip = flipper if flipper is not None else as_flipper(coin_seed(seed))
    meter = SpaceMeter()

    meter.phase("preprocessing")
    A = [BoundedQueue(k, u, int(rank[u])) for u in range(n)]
    B = [BoundedQueue(k, u, int(rank[u])) for u in range(n)]
    deg = np.zeros(n, dtype=np.int64)
    sparsifier = StreamingSparsifier(n, epsilon, derive_seed(seed, 0x20), sparsifier_mode, sparsifier_C)
    queue_words = 2 * n
    meter.set("rank_degree", 2 * n)
    meter.set("queues", queue_words)

    meter.phase("streaming")
    for i, (u, v, s, d) in enumerate(updates):
        if d == DELETE:
            raise UnsupportedModeError(f"item {i}: deletions are not supported in insertion-only mode")
        if u == v:
            raise StreamIntegrityError(f"item {i}: self-loop on {u}")
        before = len(A[u]) + len(A[v]) + len(B[u]) + len(B[v])
        if s == POS:
            A[v].add(u, int(rank[u]))
            A[u].add(v, int(rank[v]))
            deg[u] += 1
            deg[v] += 1
            sparsifier.add(u, v)
            meter.set("sparsifier", sparsifier.words())
        a, b = (u, v) if rank[u] < rank[v] else (v, u)
        p = round_probability(s, oracle.query(a, b), params)
        if flip.flip(a, b, 1.0 - p):
            B[v].add(u, int(rank[u]))
            B[u].add(v, int(rank[v]))
        after = len(A[u]) + len(A[v]) + len(B[u]) + len(B[v])
        if after != before:
            queue_words += after - before
            meter.set("queues", queue_words)

    h = sparsifier.finalize()
    meter.set("sparsifier", h.words())
    meter.phase("postprocessing")
    meter.set("labels", 2 * n)
    verts = range(n)
    c1 = cluster_from_queues(verts, perm, [q.members() for q in A], k=k)
    c2 = cluster_from_queues(verts, perm, [q.members() for q in B], k=k)
    est1 = estimated_cost(h, deg, c1)
    est2 = estimated_cost(h, deg, c2)
    branch = _choose(est1, est2)
    meter.finish()
    report = StreamReport(
        algo="insertion", n=n, seed=seed, chosen_branch=branch, est_cost_1=est1, est_cost_2=est2,
        words_peak=meter.words_peak, labels_1=c1, labels_2=c2, meter=meter,
        extra={"k": k, "sparsifier_edges": h.m},
    )
    return (c1 if branch == 1 else c2), report
