"""scikit-learn style wrappers around the clustering algorithms.

Streaming estimators take the stream as ``X`` (``EdgeUpdate`` items, 4-tuples
or an ``(m, 4)`` integer array). Offline estimators take a
:class:`SignedGraph` or a symmetric sign matrix. The oracle is a
constructor parameter so ``get_params`` / ``set_params`` and ``clone``
work as usual.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, ClusterMixin

from .ballgrow import general_cc
from .graph import RandomPermutation, canonical_labels
from .pivot import TruncationThresholds, classic_pivot, cklpu_pivot, pairwise_diss
from .predictor import ConstantOracle
from .streaming import dynamic_cc, insertion_cc
from .validation import check_epsilon, check_oracle, check_signed_graph, check_stream


def _oracle(est):
    return est.oracle if est.oracle is not None else ConstantOracle(0.5)


class _StreamMixin(ClusterMixin):
    def fit_predict(self, X, y=None, **kwargs):
        return self.fit(X, y, **kwargs).labels_


class DynamicStreamCC(_StreamMixin, BaseEstimator):
    """Dynamic-stream clustering of a complete graph (positive edges streamed).

    After ``fit``: ``labels_`` (canonical), ``report_`` (the full
    :class:`StreamReport`) and ``n_vertices_``.
    """

    def __init__(self, oracle=None, epsilon: float = 0.2, c: float = 4.0, seed: int = 0,
                 n_vertices: int | None = None, s_max: int | None = None, delta: float = 0.1):
        self.oracle = oracle
        self.epsilon = epsilon
        self.c = c
        self.seed = seed
        self.n_vertices = n_vertices
        self.s_max = s_max
        self.delta = delta

    def fit(self, X, y=None):
        updates, n = check_stream(X, self.n_vertices)
        check_epsilon(self.epsilon)
        oracle = check_oracle(_oracle(self), n)
        labels, self.report_ = dynamic_cc(updates, oracle, epsilon=self.epsilon, c=self.c,
                                          seed=self.seed, n=n, s_max=self.s_max, delta=self.delta)
        self.labels_ = canonical_labels(labels)
        self.n_vertices_ = n
        return self


class InsertionStreamCC(_StreamMixin, BaseEstimator):
    """Insertion-only clustering of a complete graph with bounded queues."""

    def __init__(self, oracle=None, k: int | None = None, epsilon: float = 0.2, seed: int = 0,
                 n_vertices: int | None = None):
        self.oracle = oracle
        self.k = k
        self.epsilon = epsilon
        self.seed = seed
        self.n_vertices = n_vertices

    def fit(self, X, y=None):
        updates, n = check_stream(X, self.n_vertices)
        check_epsilon(self.epsilon)
        oracle = check_oracle(_oracle(self), n)
        labels, self.report_ = insertion_cc(updates, oracle, k=self.k, epsilon=self.epsilon,
                                            seed=self.seed, n=n)
        self.labels_ = canonical_labels(labels)
        self.n_vertices_ = n
        return self


class GeneralStreamCC(_StreamMixin, BaseEstimator):
    """Clustering of a general signed graph by ball growing."""

    def __init__(self, oracle=None, epsilon: float = 0.2, neg_budget_words: int | None = None,
                 fallback: str = "ballgrow", seed: int = 0, n_vertices: int | None = None):
        self.oracle = oracle
        self.epsilon = epsilon
        self.neg_budget_words = neg_budget_words
        self.fallback = fallback
        self.seed = seed
        self.n_vertices = n_vertices

    def fit(self, X, y=None):
        updates, n = check_stream(X, self.n_vertices)
        oracle = check_oracle(_oracle(self), n)
        labels, self.report_ = general_cc(updates, oracle, epsilon=self.epsilon,
                                          neg_budget_words=self.neg_budget_words, seed=self.seed,
                                          fallback=self.fallback, n=n)
        self.labels_ = canonical_labels(labels)
        self.n_vertices_ = n
        return self


class PivotCC(ClusterMixin, BaseEstimator):
    """Offline pivot family on a fully known graph.

    ``method`` is ``"classic"`` (plain random pivot), ``"truncated"`` (the
    rank-truncated variant) or ``"pairwise"`` (truncated, with
    prediction-guided joins, needs ``oracle``).
    """

    _METHODS = ("classic", "truncated", "pairwise")

    def __init__(self, method: str = "truncated", oracle=None, epsilon: float = 0.2,
                 c: float = 4.0, seed: int = 0):
        self.method = method
        self.oracle = oracle
        self.epsilon = epsilon
        self.c = c
        self.seed = seed

    def fit(self, X, y=None):
        if self.method not in self._METHODS:
            raise ValueError(f"method must be one of {self._METHODS}, got {self.method!r}")
        g = check_signed_graph(X)
        perm = RandomPermutation.from_seed(g.n, self.seed)
        if self.method == "classic":
            labels = classic_pivot(g, perm)
        else:
            thr = TruncationThresholds(g.n, check_epsilon(self.epsilon), self.c)
            if self.method == "truncated":
                labels = cklpu_pivot(g, perm, thr)
            else:
                labels = pairwise_diss(g, perm, check_oracle(_oracle(self), g.n), thr, seed=self.seed)
        self.labels_ = canonical_labels(labels)
        self.permutation_ = perm
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class TruncatedPivotCC(PivotCC):
    """The rank-truncated pivot baseline (no predictions)."""

    method = "truncated"
    oracle = None

    def __init__(self, epsilon: float = 0.2, c: float = 4.0, seed: int = 0):
        self.epsilon = epsilon
        self.c = c
        self.seed = seed


__all__ = ["DynamicStreamCC", "GeneralStreamCC", "InsertionStreamCC", "PivotCC", "TruncatedPivotCC"]
