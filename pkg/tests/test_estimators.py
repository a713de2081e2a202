import numpy as np
import pytest
from sklearn.base import clone

from _reference import same_partition
from streamcc import (
    DynamicStreamCC,
    GeneralStreamCC,
    InsertionStreamCC,
    PivotCC,
    TruncatedPivotCC,
)
from streamcc.exceptions import ContractError, ParameterError
from streamcc.graph import RandomPermutation, cost, generate_sbm, to_stream
from streamcc.pivot import TruncationThresholds, classic_pivot, cklpu_pivot
from streamcc.predictor import noisy_oracle


@pytest.fixture
def sbm():
    return generate_sbm(30, 3, 0.95, seed=4)


def test_streaming_estimators_fit_predict(sbm):
    g, truth = sbm
    o = noisy_oracle(truth, 0.0)
    cases = [
        (DynamicStreamCC(oracle=o, seed=1), to_stream(g, "dynamic", churn=0.5, seed=1)),
        (InsertionStreamCC(oracle=o, seed=1), to_stream(g, emit_negatives=True, seed=1)),
        (GeneralStreamCC(oracle=o, seed=1), to_stream(g.to_general(), seed=1)),
    ]
    for est, stream in cases:
        lab = est.fit_predict(stream)
        assert lab.shape == (30,) and est.n_vertices_ == 30
        assert lab.min() == 0 and est.labels_ is lab
        assert cost(g, lab) <= cost(g, np.arange(30))
        assert hasattr(est, "report_")


def test_estimators_accept_arrays_and_tuples(sbm):
    g, truth = sbm
    stream = to_stream(g, seed=0)
    arr = np.array([tuple(x) for x in stream])
    a = DynamicStreamCC(oracle=noisy_oracle(truth, 0.1)).fit(arr).labels_
    b = DynamicStreamCC(oracle=noisy_oracle(truth, 0.1)).fit([tuple(x) for x in stream]).labels_
    assert np.array_equal(a, b)


def test_clone_and_params():
    est = DynamicStreamCC(epsilon=0.1, c=2.0, seed=7)
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    twin.set_params(seed=8)
    assert est.seed == 7 and twin.seed == 8
    assert set(TruncatedPivotCC().get_params()) == {"epsilon", "c", "seed"}


def test_pivot_estimators_match_functions(sbm):
    g, truth = sbm
    perm = RandomPermutation.from_seed(30, 5)
    assert same_partition(PivotCC("classic", seed=5).fit_predict(g), classic_pivot(g, perm))
    expect = cklpu_pivot(g, perm, TruncationThresholds(30, 0.2, 0.1))
    assert same_partition(TruncatedPivotCC(c=0.1, seed=5).fit_predict(g), expect)
    est = PivotCC("pairwise", oracle=noisy_oracle(truth, 0.0), seed=5).fit(g)
    assert np.array_equal(est.permutation_.rank, perm.rank)
    assert cost(g, est.labels_) <= cost(g, expect)


def test_pivot_estimator_accepts_sign_matrix(sbm):
    g, _ = sbm
    m = g.sign_matrix()
    np.fill_diagonal(m, 0)
    assert np.array_equal(PivotCC("classic", seed=2).fit_predict(m), PivotCC("classic", seed=2).fit_predict(g))


def test_estimator_errors(sbm):
    g, _ = sbm
    with pytest.raises(ValueError, match="method"):
        PivotCC("lp").fit(g)
    with pytest.raises(ParameterError):
        DynamicStreamCC(epsilon=0.5).fit(to_stream(g, seed=0))
    with pytest.raises(ContractError):
        DynamicStreamCC(oracle="oracle").fit(to_stream(g, seed=0))
