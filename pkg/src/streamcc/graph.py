"""Signed graph instances, clusterings, exact cost, and stream materialization.

Vertices are dense integers ``0..n-1``. A clustering is a 1-d integer array
``labels`` of length ``n``; cluster ids are opaque.

In ``complete`` mode only positive pairs are stored and every other pair is
an implicit negative edge. Implicit negatives are never materialized by the
cost routines.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import (
    ContractError,
    EdgeListParseError,
    ParameterError,
    SizeLimitError,
    StreamIntegrityError,
)

POS = 1
NEG = -1
INSERT = 1
DELETE = -1

BRUTE_FORCE_LIMIT = 12


def _pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SignedGraph:
    """Problem instance ``G = (V, E+ ∪ E-)``."""

    n: int
    pos: frozenset = frozenset()
    neg: frozenset = frozenset()
    complete: bool = False
    names: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 0:
            raise ContractError("vertex count must be non-negative")
        for (u, v) in itertools.chain(self.pos, self.neg):
            if not (0 <= u < v < self.n):
                raise ContractError(f"bad pair ({u}, {v}) for n={self.n}")
        if self.pos & self.neg:
            raise ContractError("a pair cannot be both positive and negative")
        if self.complete and self.neg:
            raise ContractError("complete-mode graphs keep negatives implicit")

    @classmethod
    def from_edges(cls, n: int, pos: Iterable = (), neg: Iterable = (),
                   complete: bool = False, names=None) -> "SignedGraph":
        pos_set = set()
        for u, v in pos:
            if u == v:
                raise ContractError(f"self-loop on {u}")
            pos_set.add(_pair(int(u), int(v)))
        neg_set = set()
        for u, v in neg:
            if u == v:
                raise ContractError(f"self-loop on {u}")
            neg_set.add(_pair(int(u), int(v)))
        return cls(int(n), frozenset(pos_set), frozenset(neg_set), bool(complete),
                   None if names is None else tuple(names))

    @property
    def m(self) -> int:
        """Number of explicitly stored edges."""
        return len(self.pos) + len(self.neg)

    @cached_property
    def pos_adj(self) -> list[frozenset]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.pos:
            adj[u].add(v)
            adj[v].add(u)
        return [frozenset(a) for a in adj]

    @cached_property
    def neg_adj(self) -> list[frozenset]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.neg:
            adj[u].add(v)
            adj[v].add(u)
        return [frozenset(a) for a in adj]

    @cached_property
    def pos_degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.pos_adj], dtype=np.int64)

    @cached_property
    def pos_array(self) -> np.ndarray:
        return np.array(sorted(self.pos), dtype=np.int64).reshape(-1, 2)

    @cached_property
    def neg_array(self) -> np.ndarray:
        return np.array(sorted(self.neg), dtype=np.int64).reshape(-1, 2)

    def sign(self, u: int, v: int) -> int:
        """+1, -1, or 0 (no edge; only possible outside complete mode)."""
        p = _pair(u, v)
        if p in self.pos:
            return POS
        if self.complete or p in self.neg:
            return NEG
        return 0

    def negative_pairs(self):
        """Explicit negatives, or every non-positive pair in complete mode."""
        if not self.complete:
            yield from sorted(self.neg)
            return
        for u in range(self.n):
            adj = self.pos_adj[u]
            for v in range(u + 1, self.n):
                if v not in adj:
                    yield (u, v)

    def num_negative(self) -> int:
        if self.complete:
            return self.n * (self.n - 1) // 2 - len(self.pos)
        return len(self.neg)

    def to_general(self) -> "SignedGraph":
        """Materialize implicit negatives (O(n^2); desk-scale only)."""
        if not self.complete:
            return self
        return SignedGraph(self.n, self.pos, frozenset(self.negative_pairs()),
                           False, self.names)

    def sign_matrix(self) -> np.ndarray:
        s = np.zeros((self.n, self.n), dtype=np.int8)
        if self.complete:
            s[:] = NEG
            np.fill_diagonal(s, 0)
        else:
            for u, v in self.neg:
                s[u, v] = s[v, u] = NEG
        for u, v in self.pos:
            s[u, v] = s[v, u] = POS
        return s


class EdgeUpdate(NamedTuple):
    """One stream item: pair ``(u, v)``, ``sign`` in {+1, -1}, ``delta`` in {+1, -1}."""

    u: int
    v: int
    sign: int = POS
    delta: int = INSERT


@dataclass(frozen=True)
class RandomPermutation:
    """Bijection ``rank: V -> {1..n}``; ``order[t-1]`` is the vertex of rank ``t``."""

    rank: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        n = len(self.rank)
        if n and sorted(self.rank.tolist()) != list(range(1, n + 1)):
            raise ContractError("rank must be a bijection onto 1..n")

    @classmethod
    def from_seed(cls, n: int, seed) -> "RandomPermutation":
        rng = np.random.default_rng(seed)
        order = rng.permutation(n)
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(1, n + 1)
        return cls(rank, seed)

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "RandomPermutation":
        order = np.asarray(order, dtype=np.int64)
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(1, len(order) + 1)
        return cls(rank)

    @classmethod
    def from_ranks(cls, ranks: Sequence[int]) -> "RandomPermutation":
        return cls(np.asarray(ranks, dtype=np.int64))

    @cached_property
    def order(self) -> np.ndarray:
        return np.argsort(self.rank, kind="stable")

    @property
    def n(self) -> int:
        return len(self.rank)


# --- clusterings -----------------------------------------------------------

def canonical_labels(labels) -> np.ndarray:
    """Relabel clusters 0, 1, ... in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    remap = np.empty(len(first), dtype=np.int64)
    remap[np.argsort(first, kind="stable")] = np.arange(len(first))
    return remap[inv.reshape(-1)]


def clusters_of(labels) -> list[list[int]]:
    groups: dict = {}
    for v, c in enumerate(np.asarray(labels).tolist()):
        groups.setdefault(c, []).append(v)
    return sorted(groups.values())


def labels_from_clusters(clusters: Iterable[Iterable[int]], n: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    for i, cl in enumerate(clusters):
        for v in cl:
            if labels[v] != -1:
                raise ContractError(f"vertex {v} appears in two clusters")
            labels[v] = i
    if (labels < 0).any():
        raise ContractError("clusters do not cover every vertex")
    return labels


def _check_labels(labels, n: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) != n:
        raise ContractError(f"clustering must label all {n} vertices, got shape {labels.shape}")
    return labels


def cost(g: SignedGraph, labels) -> int:
    """Number of disagreements: crossing positives plus intra-cluster negatives."""
    labels = _check_labels(labels, g.n)
    if g.n == 0:
        return 0
    pa = g.pos_array
    same_pos = labels[pa[:, 0]] == labels[pa[:, 1]] if len(pa) else np.zeros(0, bool)
    crossing = int(len(pa) - same_pos.sum())
    if g.complete:
        _, sizes = np.unique(labels, return_counts=True)
        intra_pairs = int((sizes * (sizes - 1) // 2).sum())
        return crossing + intra_pairs - int(same_pos.sum())
    na = g.neg_array
    intra_neg = int((labels[na[:, 0]] == labels[na[:, 1]]).sum()) if len(na) else 0
    return crossing + intra_neg


def brute_force_opt(g: SignedGraph) -> tuple[int, np.ndarray]:
    """Exact optimum by enumerating set partitions (restricted growth order).

    Branch and bound only prunes partial assignments whose cost already
    reaches the incumbent, so the witness is the first optimal partition in
    enumeration order.
    """
    n = g.n
    if n > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {n}")
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    S = g.sign_matrix().tolist()
    assign = [0] * n
    best_cost = [g.n * g.n + 1]
    best_assign = [None]

    def rec(i: int, nblocks: int, partial: int) -> None:
        if partial >= best_cost[0]:
            return
        if i == n:
            best_cost[0] = partial
            best_assign[0] = assign.copy()
            return
        row = S[i]
        cnt_pos = [0] * nblocks
        cnt_neg = [0] * nblocks
        pos_tot = 0
        for j in range(i):
            s = row[j]
            if s > 0:
                cnt_pos[assign[j]] += 1
                pos_tot += 1
            elif s < 0:
                cnt_neg[assign[j]] += 1
        for b in range(nblocks):
            assign[i] = b
            rec(i + 1, nblocks, partial + pos_tot - cnt_pos[b] + cnt_neg[b])
        assign[i] = nblocks
        rec(i + 1, nblocks + 1, partial + pos_tot)

    rec(0, 0, 0)
    return best_cost[0], np.array(best_assign[0], dtype=np.int64)


def bad_triangle_lower_bound(g: SignedGraph) -> int:
    """Greedy packing of pair-disjoint (+, +, -) triangles; a lower bound on OPT."""
    used: set = set()
    count = 0
    for u in range(g.n):
        nbrs = sorted(g.pos_adj[u])
        for i, v in enumerate(nbrs):
            if _pair(u, v) in used:
                continue
            for w in nbrs[i + 1:]:
                if g.sign(v, w) != NEG:
                    continue
                a, b, c = _pair(u, v), _pair(u, w), _pair(v, w)
                if a in used or b in used or c in used:
                    continue
                used.update((a, b, c))
                count += 1
                break
    return count


# --- generators ------------------------------------------------------------

def sbm_block_labels(n: int, k: int) -> np.ndarray:
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    return np.repeat(np.arange(k), sizes).astype(np.int64)


def generate_sbm(n: int, k: int, p: float, seed=None) -> tuple[SignedGraph, np.ndarray]:
    """Complete-mode SBM: intra pairs positive w.p. ``p``, inter pairs w.p. ``1 - p``."""
    if not (0.5 < p <= 1.0):
        raise ParameterError(f"p must lie in (0.5, 1], got {p}")
    if k < 1 or n < 0:
        raise ParameterError("need n >= 0 and k >= 1")
    truth = sbm_block_labels(n, k)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    same = truth[iu] == truth[ju]
    prob = np.where(same, p, 1.0 - p)
    keep = rng.random(len(iu)) < prob
    pos = frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))
    return SignedGraph(n, pos, frozenset(), True), truth


# --- streams ---------------------------------------------------------------

def _sample_decoys(g: SignedGraph, count: int, rng) -> list[tuple[int, int, int]]:
    """Uniform (pair, sign) combinations absent from ``g``.

    In complete mode decoys are positive items on non-positive pairs. In
    general mode a decoy may reuse a listed pair with the opposite sign, so
    even graphs without free pairs admit decoys.
    """
    if count <= 0 or g.n < 2:
        return []
    total = g.n * (g.n - 1) // 2
    signs = (POS,) if g.complete else (POS, NEG)
    taken = {(p, POS) for p in g.pos} | {(p, NEG) for p in g.neg}
    free = total * len(signs) - len(taken)
    if free <= 0:
        return []
    if total * len(signs) <= 2_000_000:
        iu, ju = np.triu_indices(g.n, 1)
        cands = []
        for s in signs:
            src = g.pos if s == POS else g.neg
            mask = np.ones(len(iu), dtype=bool)
            if src:
                ta = np.array(sorted(src), dtype=np.int64)
                idx = ta[:, 0] * g.n - ta[:, 0] * (ta[:, 0] + 1) // 2 + (ta[:, 1] - ta[:, 0] - 1)
                mask[idx] = False
            cands.append(np.stack([iu[mask], ju[mask], np.full(mask.sum(), s)], axis=1))
        cand = np.concatenate(cands)
        pick = rng.choice(len(cand), size=count, replace=count > len(cand))
        return [tuple(x) for x in cand[pick].tolist()]
    out = []
    while len(out) < count:
        u, v = rng.integers(0, g.n, size=2).tolist()
        s = signs[int(rng.integers(0, len(signs)))]
        if u != v and (_pair(u, v), s) not in taken:
            out.append((*_pair(u, v), s))
    return out


def to_stream(g: SignedGraph, mode: str = "insertion_only", churn: float = 0.0,
              seed=None, emit_negatives: bool = False) -> list[EdgeUpdate]:
    """Materialize ``g`` as an edge stream.

    ``dynamic`` mode adds ``round(churn * m)`` insert/delete pairs of decoy
    items drawn from (pair, sign) combinations absent from ``g``; every
    decoy delete follows its insert. ``emit_negatives`` also streams the implicit negatives of a
    complete-mode graph.
    """
    if mode not in ("insertion_only", "dynamic"):
        raise ParameterError(f"unknown stream mode {mode!r}")
    if churn < 0:
        raise ParameterError("churn must be >= 0")
    rng = np.random.default_rng(seed)
    items = [EdgeUpdate(u, v, POS, INSERT) for u, v in sorted(g.pos)]
    items += [EdgeUpdate(u, v, NEG, INSERT) for u, v in sorted(g.neg)]
    if emit_negatives and g.complete:
        items += [EdgeUpdate(u, v, NEG, INSERT) for u, v in g.negative_pairs()]
    m = len(items)
    if mode == "insertion_only" or churn == 0:
        return [items[i] for i in rng.permutation(m)]

    count = int(round(churn * (len(g.pos) + len(g.neg))))
    decoys = _sample_decoys(g, count, rng)
    items += [EdgeUpdate(u, v, s, INSERT) for u, v, s in decoys]
    items += [EdgeUpdate(u, v, s, DELETE) for u, v, s in decoys]
    order = rng.permutation(len(items))
    pos_of = np.empty(len(items), dtype=np.int64)
    pos_of[order] = np.arange(len(items))
    d = len(decoys)
    for j in range(d):
        a, b = m + j, m + d + j
        if pos_of[a] > pos_of[b]:
            pos_of[a], pos_of[b] = pos_of[b], pos_of[a]
    out = [None] * len(items)
    for i, p in enumerate(pos_of.tolist()):
        out[p] = items[i]
    return out


def replay_stream(updates: Iterable[EdgeUpdate], n: int | None = None,
                  complete: bool = False) -> SignedGraph:
    """Net graph of a stream. Raises on negative or >1 multiplicities."""
    counts: dict = {}
    max_id = -1
    for i, (u, v, s, d) in enumerate(updates):
        if u == v:
            raise StreamIntegrityError(f"item {i}: self-loop on {u}")
        key = (_pair(u, v), s)
        c = counts.get(key, 0) + d
        if c < 0:
            raise StreamIntegrityError(f"item {i}: delete of ({u}, {v}, {s:+d}) without insert")
        counts[key] = c
        max_id = max(max_id, u, v)
    if n is None:
        n = max_id + 1
    pos, neg = set(), set()
    for (p, s), c in counts.items():
        if c > 1:
            raise StreamIntegrityError(f"pair {p} sign {s:+d} has net multiplicity {c}")
        if c == 1:
            (pos if s == POS else neg).add(p)
    if pos & neg:
        raise StreamIntegrityError("a pair ends the stream with both signs")
    if complete:
        neg = set()
    return SignedGraph(n, frozenset(pos), frozenset(neg), complete)


# --- file formats -----------------------------------------------------------

_SIGNS = {"+": POS, "+1": POS, "1": POS, "-": NEG, "-1": NEG}


def load_edge_list(path, directed: bool = False, sign_convention: str = "auto") -> SignedGraph:
    """Read a whitespace-separated edge list (``u v`` or ``u v s``).

    Labels are remapped to dense ids in order of first appearance; the
    original labels are kept in ``names``. Directed duplicates are merged
    and self-loops dropped. Under ``auto`` the presence of any sign column
    switches to explicit-sign (general) mode; otherwise listed edges are
    positive and non-edges implicitly negative.
    """
    if sign_convention not in ("auto", "positive", "column"):
        raise ParameterError(f"unknown sign convention {sign_convention!r}")
    ids: dict[str, int] = {}
    rows = []
    signed = sign_convention == "column"
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("%"):
                continue
            tok = line.split()
            if len(tok) not in (2, 3):
                raise EdgeListParseError(path, lineno, line, "expected 2 or 3 columns")
            s = POS
            if len(tok) == 3:
                if tok[2] not in _SIGNS:
                    raise EdgeListParseError(path, lineno, line, "sign must be + or -")
                if sign_convention != "positive":
                    s = _SIGNS[tok[2]]
                    signed = True
            for t in tok[:2]:
                if t not in ids:
                    ids[t] = len(ids)
            rows.append((lineno, line, ids[tok[0]], ids[tok[1]], s))
    pos, neg = set(), set()
    for lineno, line, u, v, s in rows:
        if u == v:
            continue
        p = _pair(u, v)
        if (s == POS and p in neg) or (s == NEG and p in pos):
            raise EdgeListParseError(path, lineno, line, "pair listed with both signs")
        (pos if s == POS else neg).add(p)
    names = tuple(sorted(ids, key=ids.get))
    return SignedGraph(len(ids), frozenset(pos), frozenset(neg), not signed, names)


def write_edge_list(path, g: SignedGraph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in sorted(g.pos):
            fh.write(f"{u} {v}\n" if g.complete else f"{u} {v} +\n")
        for u, v in sorted(g.neg):
            fh.write(f"{u} {v} -\n")


def write_stream(path, updates: Iterable[EdgeUpdate], n: int, complete: bool = True) -> None:
    """Stream file: header ``# n=<n> complete=<0|1>`` then ``u v s d`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={n} complete={int(complete)}\n")
        for u, v, s, d in updates:
            fh.write(f"{u} {v} {'+' if s == POS else '-'} {'+1' if d == INSERT else '-1'}\n")


def read_stream(path) -> tuple[list[EdgeUpdate], int, bool]:
    updates = []
    n = None
    complete = True
    max_id = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "n" and val:
                        n = int(val)
                    elif key == "complete" and val:
                        complete = val not in ("0", "false", "False")
                continue
            tok = line.split()
            if len(tok) != 4 or tok[2] not in ("+", "-") or tok[3] not in ("+1", "-1", "1"):
                raise EdgeListParseError(path, lineno, line, "expected 'u v s d'")
            try:
                u, v = int(tok[0]), int(tok[1])
            except ValueError:
                raise EdgeListParseError(path, lineno, line, "vertex ids must be integers") from None
            if u == v or u < 0 or v < 0:
                raise EdgeListParseError(path, lineno, line, "bad vertex pair")
            updates.append(EdgeUpdate(u, v, POS if tok[2] == "+" else NEG,
                                      DELETE if tok[3] == "-1" else INSERT))
            max_id = max(max_id, u, v)
    if n is None:
        n = max_id + 1
    return updates, n, complete


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, c in enumerate(np.asarray(labels).tolist()):
            fh.write(f"{v} {c}\n")


def read_labels(path, n: int | None = None) -> np.ndarray:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) != 2:
                raise EdgeListParseError(path, lineno, line, "expected 'vertex label'")
            pairs.append((int(tok[0]), int(tok[1])))
    size = n if n is not None else (max(v for v, _ in pairs) + 1 if pairs else 0)
    labels = np.full(size, -1, dtype=np.int64)
    for v, c in pairs:
        labels[v] = c
    if (labels < 0).any():
        raise ContractError(f"{path}: not every vertex is labelled")
    return labels
