"""Pairwise distance predictors, the rounding functions, and predictor quality."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, ParameterError
from .graph import NEG, POS, SignedGraph


@dataclass(frozen=True)
class RoundingParams:
    """Breakpoints of the positive-edge rounding function."""

    a: float = 0.19
    b: float = 0.5095

    def __post_init__(self):
        if not (0.0 < self.a < self.b < 1.0):
            raise ParameterError(f"need 0 < a < b < 1, got a={self.a}, b={self.b}")


DEFAULT_ROUNDING = RoundingParams()


def _sign_value(sign) -> int:
    if sign in (POS, "positive", "+", True):
        return POS
    if sign in (NEG, "negative", "-", False):
        return NEG
    raise ParameterError(f"unknown sign {sign!r}")


def round_probability(sign, d: float, params: RoundingParams = DEFAULT_ROUNDING) -> float:
    """Probability ``p`` that the pair is kept apart (join happens w.p. ``1 - p``)."""
    if not (0.0 <= d <= 1.0):
        raise ParameterError(f"distance must lie in [0, 1], got {d}")
    if _sign_value(sign) == NEG:
        return float(d)
    if d < params.a:
        return 0.0
    if d > params.b:
        return 1.0
    x = (d - params.a) / (params.b - params.a)
    return x * x


def round_probability_array(positive: np.ndarray, d: np.ndarray,
                            params: RoundingParams = DEFAULT_ROUNDING) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    x = np.clip((d - params.a) / (params.b - params.a), 0.0, 1.0)
    return np.where(positive, x * x, d)


class DistanceOracle:
    """Symmetric distance in [0, 1] with ``query(u, u) == 0``."""

    kind = "abstract"

    def _raw(self, u: int, v: int) -> float:
        raise NotImplementedError

    def query(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        return self._raw(u, v) if u < v else self._raw(v, u)

    __call__ = query

    def pairwise(self, us, vs) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        return np.array([self.query(int(a), int(b)) for a, b in zip(us, vs)], dtype=float)

    def matrix(self, n: int) -> np.ndarray:
        iu, ju = np.triu_indices(n, 1)
        out = np.zeros((n, n))
        vals = self.pairwise(iu, ju)
        out[iu, ju] = vals
        out[ju, iu] = vals
        return out


class NoisyOracle(DistanceOracle):
    """``eps0`` inside a reference cluster, ``1 - eps0`` across."""

    kind = "noisy"

    def __init__(self, reference, eps0: float):
        if not (0.0 <= eps0 < 0.5):
            raise ParameterError(f"eps0 must lie in [0, 0.5), got {eps0}")
        self.reference = np.asarray(reference).copy()
        self.eps0 = float(eps0)

    def _raw(self, u, v):
        return self.eps0 if self.reference[u] == self.reference[v] else 1.0 - self.eps0

    def pairwise(self, us, vs):
        same = self.reference[np.asarray(us)] == self.reference[np.asarray(vs)]
        out = np.where(same, self.eps0, 1.0 - self.eps0)
        return np.where(np.asarray(us) == np.asarray(vs), 0.0, out)


def noisy_oracle(reference, eps0: float) -> NoisyOracle:
    return NoisyOracle(reference, eps0)


def indicator_oracle(labels) -> NoisyOracle:
    """0/1 oracle of a clustering: 0 inside clusters, 1 across."""
    return NoisyOracle(labels, 0.0)


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


class EmbeddingOracle(DistanceOracle):
    """Cosine distance ``1 - cos(x_u, x_v)`` clamped to [0, 1]."""

    kind = "embedding"

    def __init__(self, table: EmbeddingTable | np.ndarray):
        vecs = np.asarray(getattr(table, "vectors", table), dtype=float)
        if vecs.ndim != 2:
            raise ContractError("embedding table must be 2-d")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(norms == 0):
            bad = int(np.flatnonzero(norms == 0)[0])
            raise ContractError(f"zero embedding vector for vertex {bad}")
        self.unit = vecs / norms[:, None]

    def _raw(self, u, v):
        return float(min(1.0, max(0.0, 1.0 - float(self.unit[u] @ self.unit[v]))))

    def pairwise(self, us, vs):
        us, vs = np.asarray(us), np.asarray(vs)
        cos = np.einsum("ij,ij->i", self.unit[us], self.unit[vs])
        return np.where(us == vs, 0.0, np.clip(1.0 - cos, 0.0, 1.0))


def embedding_oracle(table) -> EmbeddingOracle:
    return EmbeddingOracle(table)


class TableOracle(DistanceOracle):
    """Explicit per-pair distances; unlisted pairs default to ``default``.

    Values outside [0, 1] are clamped and counted in ``clamped``.
    """

    kind = "table"

    def __init__(self, entries: dict | None = None, default: float = 1.0):
        self.default = float(default)
        self.clamped = 0
        self.table: dict[tuple[int, int], float] = {}
        for (u, v), d in (entries or {}).items():
            self.set(u, v, d)

    def set(self, u: int, v: int, d: float) -> None:
        if u == v:
            return
        d = float(d)
        if not (0.0 <= d <= 1.0):
            self.clamped += 1
            d = min(1.0, max(0.0, d))
        self.table[(u, v) if u < v else (v, u)] = d

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "TableOracle":
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0]
        o = cls()
        for u, v in itertools.combinations(range(n), 2):
            o.set(u, v, mat[u, v])
        return o

    def _raw(self, u, v):
        return self.table.get((u, v), self.default)


class ConstantOracle(DistanceOracle):
    kind = "constant"

    def __init__(self, value: float):
        if not (0.0 <= value <= 1.0):
            raise ParameterError(f"constant distance must lie in [0, 1], got {value}")
        self.value = float(value)

    def _raw(self, u, v):
        return self.value

    def pairwise(self, us, vs):
        return np.where(np.asarray(us) == np.asarray(vs), 0.0, self.value)


# --- file formats -----------------------------------------------------------

def load_table_oracle(path, default: float = 1.0) -> TableOracle:
    o = TableOracle(default=default)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) != 3:
                raise ContractError(f"{path}:{lineno}: expected 'u v d'")
            o.set(int(tok[0]), int(tok[1]), float(tok[2]))
    return o


def load_embedding(path, n: int | None = None) -> EmbeddingTable:
    rows: dict[int, list[float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) < 2:
                raise ContractError(f"{path}:{lineno}: expected 'u x1 ... xd'")
            rows[int(tok[0])] = [float(x) for x in tok[1:]]
    dims = {len(r) for r in rows.values()}
    if len(dims) > 1:
        raise ContractError(f"{path}: inconsistent embedding dimensions {sorted(dims)}")
    size = n if n is not None else (max(rows) + 1 if rows else 0)
    dim = dims.pop() if dims else 0
    vecs = np.zeros((size, dim))
    for u, r in rows.items():
        vecs[u] = r
    return EmbeddingTable(vecs)


def write_embedding(path, vectors: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, row in enumerate(np.asarray(vectors)):
            fh.write(f"{u} " + " ".join(repr(float(x)) for x in row) + "\n")


def spectral_embedding(g: SignedGraph, dim: int, seed=None) -> EmbeddingTable:
    """Spectral embedding of ``G+`` (normalized Laplacian), used as a predictor."""
    from sklearn.manifold import spectral_embedding as _se

    adj = np.zeros((g.n, g.n))
    for u, v in g.pos:
        adj[u, v] = adj[v, u] = 1.0
    if g.n <= dim + 1:
        raise ParameterError(f"embedding dimension {dim} too large for n={g.n}")
    with warnings.catch_warnings():
        # G+ of a clusterable graph is typically disconnected; that is expected.
        warnings.filterwarnings("ignore", message="Graph is not fully connected")
        vecs = _se(adj, n_components=dim, drop_first=False,
                   random_state=None if seed is None else int(seed) % 2**32)
    norms = np.linalg.norm(vecs, axis=1)
    vecs[norms == 0] = 1e-12
    return EmbeddingTable(vecs)


# --- quality ----------------------------------------------------------------

def quality_L(g: SignedGraph, o: DistanceOracle) -> float:
    """Sum of ``d`` over positive pairs plus ``1 - d`` over negative pairs."""
    pa = g.pos_array
    pos_term = float(o.pairwise(pa[:, 0], pa[:, 1]).sum()) if len(pa) else 0.0
    if g.complete:
        if g.n < 2:
            return pos_term
        iu, ju = np.triu_indices(g.n, 1)
        all_term = float((1.0 - o.pairwise(iu, ju)).sum())
        pos_compl = float((1.0 - o.pairwise(pa[:, 0], pa[:, 1])).sum()) if len(pa) else 0.0
        return pos_term + all_term - pos_compl
    na = g.neg_array
    neg_term = float((1.0 - o.pairwise(na[:, 0], na[:, 1])).sum()) if len(na) else 0.0
    return pos_term + neg_term


def adapted_quality_L(h, neg_edges, o: DistanceOracle) -> float:
    """Like ``quality_L`` with positive terms weighted by sparsifier weights."""
    pos_term = 0.0
    if len(h.edges):
        pos_term = float((h.weights * o.pairwise(h.edges[:, 0], h.edges[:, 1])).sum())
    neg = np.asarray(list(neg_edges), dtype=np.int64).reshape(-1, 2)
    neg_term = float((1.0 - o.pairwise(neg[:, 0], neg[:, 1])).sum()) if len(neg) else 0.0
    return pos_term + neg_term


def triangle_violation_count(o: DistanceOracle, vertices, sample_size: int | None = None,
                             seed=None, tol: float = 1e-9) -> int:
    """Count triples whose distances violate the triangle inequality.

    With ``sample_size=None`` every unordered triple is checked; otherwise
    ``sample_size`` random triples are drawn. A triple counts once even if
    several of its three inequalities fail.
    """
    verts = np.asarray(list(vertices), dtype=np.int64)
    k = len(verts)
    if k < 3:
        return 0
    if sample_size is None:
        idx = np.array(list(itertools.combinations(range(k), 3)), dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        idx = np.array([rng.choice(k, size=3, replace=False) for _ in range(sample_size)],
                       dtype=np.int64).reshape(-1, 3)
    a, b, c = verts[idx[:, 0]], verts[idx[:, 1]], verts[idx[:, 2]]
    dab, dbc, dac = o.pairwise(a, b), o.pairwise(b, c), o.pairwise(a, c)
    bad = (dab + dbc < dac - tol) | (dab + dac < dbc - tol) | (dac + dbc < dab - tol)
    return int(bad.sum())
