"""Input checks shared by the estimators, the harness and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ContractError, ParameterError, StreamIntegrityError
from .graph import NEG, POS, EdgeUpdate, SignedGraph
from .predictor import DistanceOracle


def _as_int(x, what: str) -> int:
    if isinstance(x, (bool, np.bool_)) or not isinstance(x, (numbers.Integral, np.integer)):
        raise ContractError(f"{what} must be an integer, got {x!r}")
    return int(x)


def check_stream(stream, n: int | None = None) -> tuple[list[EdgeUpdate], int]:
    """Normalise a stream to a list of :class:`EdgeUpdate` and infer ``n``.

    Accepts ``EdgeUpdate`` items, 4-tuples or an integer array with four
    columns ``(u, v, sign, delta)``.
    """
    if isinstance(stream, np.ndarray):
        if stream.ndim != 2 or stream.shape[1] != 4:
            raise ContractError(f"stream array must have shape (m, 4), got {stream.shape}")
        stream = stream.tolist()
    out: list[EdgeUpdate] = []
    top = -1
    for i, item in enumerate(stream):
        try:
            u, v, s, d = item
        except (TypeError, ValueError):
            raise ContractError(f"item {i}: expected (u, v, sign, delta), got {item!r}") from None
        u, v = _as_int(u, f"item {i} endpoint"), _as_int(v, f"item {i} endpoint")
        s, d = _as_int(s, f"item {i} sign"), _as_int(d, f"item {i} delta")
        if u < 0 or v < 0:
            raise ContractError(f"item {i}: negative vertex id")
        if u == v:
            raise StreamIntegrityError(f"item {i}: self-loop on {u}")
        if s not in (POS, NEG):
            raise ContractError(f"item {i}: sign must be +1 or -1, got {s}")
        if d not in (1, -1):
            raise ContractError(f"item {i}: delta must be +1 or -1, got {d}")
        top = max(top, u, v)
        out.append(EdgeUpdate(u, v, s, d))
    if n is None:
        n = top + 1
    elif top >= n:
        raise ContractError(f"stream mentions vertex {top} but n={n}")
    return out, int(n)


def check_signed_graph(g) -> SignedGraph:
    """Accept a :class:`SignedGraph` or a square symmetric sign matrix.

    A matrix with entries in {-1, 0, +1} becomes a general graph when it
    contains zeros off the diagonal and a complete graph otherwise.
    """
    if isinstance(g, SignedGraph):
        return g
    a = np.asarray(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"expected a SignedGraph or a square sign matrix, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ContractError("sign matrix must be symmetric")
    if not np.isin(a, (-1, 0, 1)).all():
        raise ContractError("sign matrix entries must be -1, 0 or +1")
    n = a.shape[0]
    iu, ju = np.triu_indices(n, 1)
    vals = a[iu, ju]
    pos = frozenset(zip(iu[vals > 0].tolist(), ju[vals > 0].tolist()))
    neg = frozenset(zip(iu[vals < 0].tolist(), ju[vals < 0].tolist()))
    complete = bool((vals != 0).all())
    return SignedGraph(n, pos, frozenset() if complete else neg, complete)


def check_oracle(oracle, n: int | None = None, probe: int = 16) -> DistanceOracle:
    """Make sure ``oracle`` answers queries with distances in [0, 1]."""
    if not isinstance(oracle, DistanceOracle):
        raise ContractError(f"expected a DistanceOracle, got {type(oracle).__name__}")
    if n is not None and n >= 2:
        m = min(probe, n - 1)
        us = np.arange(m)
        d = np.asarray(oracle.pairwise(us, us + 1), dtype=float)
        if not np.all((d >= 0.0) & (d <= 1.0)):
            raise ContractError("oracle returned a distance outside [0, 1]")
    return oracle


def check_labels(labels, n: int) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.shape != (n,):
        raise ContractError(f"labels must have shape ({n},), got {lab.shape}")
    if not np.issubdtype(lab.dtype, np.integer):
        raise ContractError("labels must be integers")
    return lab.astype(np.int64)


def check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not (0.0 < eps < 0.25):
        raise ParameterError(f"epsilon must lie in (0, 1/4), got {epsilon}")
    return eps
