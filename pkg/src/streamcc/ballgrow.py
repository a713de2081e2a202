"""Prediction-guided ball growing on a sparsifier for general signed graphs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._random import derive_seed
from .exceptions import ContractError, ParameterError
from .graph import DELETE, NEG, POS, EdgeUpdate, replay_stream
from .predictor import DistanceOracle, adapted_quality_L
from .sketch import SpaceMeter, SparsifierGraph, StreamingSparsifier, build_sparsifier

SAFEGUARD_RADIUS = 1.0 / 3.0 - 1e-9


@dataclass
class BallState:
    center: int
    radius: float
    members: list[int]
    boundary: float
    volume: float
    safeguard: bool = False


def total_volume(h: SparsifierGraph, oracle: DistanceOracle) -> float:
    """``V* = sum of w' * d`` over the whole sparsifier."""
    if h.m == 0:
        return 0.0
    return float((h.weights * oracle.pairwise(h.edges[:, 0], h.edges[:, 1])).sum())


def _edge_masks(h: SparsifierGraph, members, remainder):
    inside = np.zeros(h.n, dtype=bool)
    inside[list(members)] = True
    alive = np.ones(h.n, dtype=bool) if remainder is None else np.zeros(h.n, dtype=bool)
    if remainder is not None:
        alive[list(remainder)] = True
    a, b = h.edges[:, 0], h.edges[:, 1]
    live = alive[a] & alive[b]
    intra = live & inside[a] & inside[b]
    cut = live & (inside[a] != inside[b])
    return inside, intra, cut


def ball_boundary(h: SparsifierGraph, members, remainder=None) -> float:
    if h.m == 0:
        return 0.0
    _, _, cut = _edge_masks(h, members, remainder)
    return float(h.weights[cut].sum())


def ball_volume(h: SparsifierGraph, oracle: DistanceOracle, center: int, members, r: float,
                n_total: int, remainder=None, vstar: float | None = None) -> float:
    """Seed term ``V*/n`` plus intra-ball mass plus the partial mass of cut edges."""
    members = list(members)
    if center not in members:
        raise ContractError("the center must belong to its ball")
    far = max((oracle.query(center, m) for m in members), default=0.0)
    if far > r + 1e-12:
        raise ContractError(f"radius {r} is below the farthest member distance {far}")
    vstar = total_volume(h, oracle) if vstar is None else vstar
    vol = vstar / n_total if n_total else 0.0
    if h.m == 0:
        return vol
    inside, intra, cut = _edge_masks(h, members, remainder)
    a, b = h.edges[:, 0], h.edges[:, 1]
    if intra.any():
        vol += float((h.weights[intra] * oracle.pairwise(a[intra], b[intra])).sum())
    if cut.any():
        ins = np.where(inside[a[cut]], a[cut], b[cut])
        du = oracle.pairwise(np.full(len(ins), center), ins)
        vol += float((h.weights[cut] * (r - du)).sum())
    return vol


def _adjacency(h: SparsifierGraph, oracle: DistanceOracle):
    adj = [[] for _ in range(h.n)]
    if h.m:
        d = oracle.pairwise(h.edges[:, 0], h.edges[:, 1])
        for (x, y), w, dxy in zip(h.edges.tolist(), h.weights.tolist(), d.tolist()):
            adj[x].append((y, w, dxy))
            adj[y].append((x, w, dxy))
    return adj


def grow_ball(h: SparsifierGraph, oracle: DistanceOracle, remainder, center: int, n_total: int,
              vstar: float | None = None, adj=None) -> BallState:
    """Smallest radius whose ball satisfies ``boundary <= 3 ln(n+1) * volume``.

    Between consecutive member distances the boundary is constant and the
    volume is linear in ``r``, so each segment is solved in closed form.
    If no radius below 1/3 works (only possible for non-metric
    distances) the ball is cut at ``1/3 - 1e-9`` and flagged.
    """
    alive = np.zeros(h.n, dtype=bool)
    alive[list(remainder)] = True
    if not alive[center]:
        raise ContractError(f"center {center} is not in the remainder")
    vstar = total_volume(h, oracle) if vstar is None else vstar
    adj = _adjacency(h, oracle) if adj is None else adj
    cc = 3.0 * math.log(n_total + 1)
    seed_term = vstar / n_total if n_total else 0.0
    rem = np.flatnonzero(alive)
    dist = oracle.pairwise(np.full(len(rem), center), rem)
    dist[rem == center] = 0.0
    order = np.lexsort((rem, dist))
    rem, dist = rem[order].tolist(), dist[order].tolist()
    du = dict(zip(rem, dist))
    scale = 1.0 + float(h.weights.sum())

    inside = set()
    intra = cut_a = cut_d = 0.0
    radius = None
    i = 0
    while i < len(rem):
        r_i = dist[i]
        while i < len(rem) and dist[i] == r_i:
            x = rem[i]
            for y, w, dxy in adj[x]:
                if not alive[y]:
                    continue
                if y in inside:
                    cut_a -= w
                    cut_d -= w * du[y]
                    intra += w * dxy
                else:
                    cut_a += w
                    cut_d += w * du[x]
            inside.add(x)
            i += 1
        r_next = dist[i] if i < len(rem) else math.inf
        if cut_a <= 1e-12 * scale:
            cut_a = 0.0
            cand = r_i
        else:
            v0 = seed_term + intra - cut_d
            cand = max(r_i, 1.0 / cc - v0 / cut_a)
        if cand < r_next:
            radius = cand
            break
    if radius is None or radius >= 1.0 / 3.0:
        members = [v for v, d in zip(rem, dist) if d <= SAFEGUARD_RADIUS]
        bnd = ball_boundary(h, members, rem)
        vol = ball_volume(h, oracle, center, members, SAFEGUARD_RADIUS, n_total, rem, vstar)
        return BallState(center, SAFEGUARD_RADIUS, sorted(members), bnd, vol, True)
    members = sorted(inside)
    vol = seed_term + intra - cut_d + cut_a * radius
    return BallState(center, float(radius), members, cut_a, vol, False)


def peel_balls(h: SparsifierGraph, oracle: DistanceOracle, n: int) -> tuple[np.ndarray, list[BallState]]:
    """Grow balls around the lowest remaining vertex id until every vertex is covered."""
    vstar = total_volume(h, oracle)
    adj = _adjacency(h, oracle)
    labels = np.full(n, -1, dtype=np.int64)
    remaining = set(range(n))
    balls = []
    while remaining:
        center = min(remaining)
        ball = grow_ball(h, oracle, remaining, center, n, vstar, adj)
        for v in ball.members:
            labels[v] = len(balls)
        remaining.difference_update(ball.members)
        balls.append(ball)
    return labels, balls


@dataclass
class BallAudit:
    boundary: float
    volume: float
    rule_ok: bool
    radius_ok: bool


def audit_balls(h: SparsifierGraph, oracle: DistanceOracle, balls: list[BallState], n: int,
                rtol: float = 1e-9) -> list[BallAudit]:
    """Recompute boundary and volume of each ball from scratch on its remainder."""
    vstar = total_volume(h, oracle)
    cc = 3.0 * math.log(n + 1)
    remaining = set(range(n))
    out = []
    for b in balls:
        bnd = ball_boundary(h, b.members, remaining)
        vol = ball_volume(h, oracle, b.center, b.members, b.radius, n, remaining, vstar)
        rhs = cc * vol
        ok = bnd <= rhs + rtol * max(1.0, abs(rhs), bnd)
        out.append(BallAudit(bnd, vol, ok, b.radius < 1.0 / 3.0))
        remaining.difference_update(b.members)
    return out


def positive_cost_h(h: SparsifierGraph, labels) -> float:
    """Weight of sparsifier edges crossing clusters (half the summed boundaries)."""
    if h.m == 0:
        return 0.0
    labels = np.asarray(labels)
    cross = labels[h.edges[:, 0]] != labels[h.edges[:, 1]]
    return float(h.weights[cross].sum())


def intra_negative_count(neg_edges, labels) -> int:
    labels = np.asarray(labels)
    return sum(1 for u, v in neg_edges if labels[u] == labels[v])


@dataclass
class GeneralReport:
    algo: str
    n: int
    seed: int
    branch: str
    budget_exceeded: bool
    neg_budget_words: int
    words_peak: int
    concession_words: int
    balls: list[BallState]
    safeguard_count: int
    sparsifier: SparsifierGraph
    vstar: float
    stored_negatives: int
    adapted_L: float | None = None
    meter: SpaceMeter | None = field(default=None, repr=False)

    def ball_summary(self) -> list[tuple[int, float, int]]:
        return [(b.center, b.radius, len(b.members)) for b in self.balls]


def default_neg_budget(n: int, epsilon: float) -> int:
    return int(16 * n * max(1, math.ceil(math.log2(max(n, 2)))) / epsilon ** 2)


FALLBACKS = ("ballgrow", "singletons")


def general_cc(stream: Iterable[EdgeUpdate], oracle: DistanceOracle, epsilon: float = 0.2,
               neg_budget_words: int | None = None, seed: int = 0, fallback: str = "ballgrow", *,
               n: int | None = None, sparsifier_mode: str = "exact",
               sparsifier_C: float = 8.0) -> tuple[np.ndarray, GeneralReport]:
    """Clustering of a general signed graph (absent pairs are neutral).

    Negative edges are stored until their storage exceeds the budget; after
    that the ball-growing branch is taken. If they always fit, the
    ``fallback`` strategy runs instead and the report says so. Positive
    edges feed an insertion-only sparsifier; once a positive deletion is
    seen, the sparsifier is rebuilt from the replayed net graph and that
    storage is reported as a concession.
    """
    if fallback not in FALLBACKS:
        raise ParameterError(f"unknown fallback {fallback!r}; choose from {FALLBACKS}")
    updates = list(stream)
    top = 1 + max((max(u, v) for u, v, _, _ in updates), default=-1)
    n = top if n is None else n
    if top > n:
        raise ContractError(f"stream mentions vertex {top - 1} but n={n}")
    budget = default_neg_budget(n, epsilon) if neg_budget_words is None else int(neg_budget_words)
    seed = int(seed)
    meter = SpaceMeter()
    meter.phase("streaming")
    sp = StreamingSparsifier(n, epsilon, derive_seed(seed, 0x20), sparsifier_mode, sparsifier_C)
    dynamic = False
    negatives: dict[tuple[int, int], int] = {}
    exceeded = False
    for u, v, s, d in updates:
        p = (u, v) if u < v else (v, u)
        if s == POS:
            if d == DELETE:
                dynamic = True
            if not dynamic:
                sp.add(u, v)
                meter.set("sparsifier", sp.words())
            continue
        if exceeded:
            continue
        c = negatives.get(p, 0) + d
        if c:
            negatives[p] = c
        else:
            negatives.pop(p, None)
        if 2 * len(negatives) > budget:
            exceeded = True
            negatives.clear()
        meter.set("negatives", 2 * len(negatives))
    concession = 0
    if dynamic:
        net = replay_stream([x for x in updates if x.sign == POS], n=n)
        pairs = sorted(net.pos)
        if sparsifier_mode == "exact":
            h = SparsifierGraph(n, np.array(pairs, dtype=np.int64).reshape(-1, 2), np.ones(len(pairs)))
        else:
            h = build_sparsifier(pairs, epsilon, derive_seed(seed, 0x20), "sampled", n=n, C=sparsifier_C)
        concession = 2 * len(pairs) + h.words()
        meter.release("sparsifier")
    else:
        h = sp.finalize()
        meter.set("sparsifier", h.words())

    meter.phase("postprocessing")
    meter.set("labels", n)
    stored = [p for p, c in negatives.items() if c > 0]
    vstar = total_volume(h, oracle)
    if not exceeded and fallback == "singletons":
        labels, balls, branch = np.arange(n, dtype=np.int64), [], "fallback:singletons"
    else:
        labels, balls = peel_balls(h, oracle, n)
        branch = "ballgrow" if exceeded else "fallback:ballgrow"
    meter.finish()
    report = GeneralReport(
        algo="general", n=n, seed=seed, branch=branch, budget_exceeded=exceeded,
        neg_budget_words=budget, words_peak=meter.words_peak, concession_words=concession,
        balls=balls, safeguard_count=sum(b.safeguard for b in balls), sparsifier=h, vstar=vstar,
        stored_negatives=len(stored),
        adapted_L=None if exceeded else adapted_quality_L(h, stored, oracle), meter=meter,
    )
    return labels, report
