import numpy as np
import pytest

from streamcc.exceptions import ContractError, ParameterError, StreamIntegrityError
from streamcc.graph import EdgeUpdate, SignedGraph
from streamcc.predictor import ConstantOracle, DistanceOracle
from streamcc.validation import check_epsilon, check_labels, check_oracle, check_signed_graph, check_stream


def test_check_stream_normalises_inputs():
    ups, n = check_stream([(0, 2, 1, 1), EdgeUpdate(1, 2, -1, 1)])
    assert n == 3 and all(isinstance(u, EdgeUpdate) for u in ups)
    ups, n = check_stream(np.array([[0, 1, 1, 1], [0, 1, 1, -1]]), n=5)
    assert n == 5 and ups[1].delta == -1
    assert check_stream([]) == ([], 0)


@pytest.mark.parametrize("item, err", [
    ((0, 0, 1, 1), StreamIntegrityError),
    ((0, 1, 2, 1), ContractError),
    ((0, 1, 1, 0), ContractError),
    ((0, 1.5, 1, 1), ContractError),
    ((-1, 1, 1, 1), ContractError),
    ((0, 1, 1), ContractError),
    ((True, 1, 1, 1), ContractError),
])
def test_check_stream_rejects(item, err):
    with pytest.raises(err):
        check_stream([item])


def test_check_stream_vertex_bound():
    with pytest.raises(ContractError, match="n=2"):
        check_stream([(0, 2, 1, 1)], n=2)
    with pytest.raises(ContractError):
        check_stream(np.zeros((3, 3), dtype=int))


def test_check_signed_graph_matrix_forms():
    full = np.array([[0, 1, -1], [1, 0, 1], [-1, 1, 0]])
    g = check_signed_graph(full)
    assert g.complete and g.pos == frozenset({(0, 1), (1, 2)})
    part = np.array([[0, 1, 0], [1, 0, -1], [0, -1, 0]])
    g = check_signed_graph(part)
    assert not g.complete and g.neg == frozenset({(1, 2)})
    same = SignedGraph(2)
    assert check_signed_graph(same) is same
    for bad in (np.ones((2, 3)), np.array([[0, 1], [-1, 0]]), np.array([[0, 2], [2, 0]])):
        with pytest.raises(ContractError):
            check_signed_graph(bad)


class _Broken(DistanceOracle):
    def _raw(self, u, v):
        return 1.5


def test_check_oracle():
    o = ConstantOracle(0.2)
    assert check_oracle(o, 10) is o
    with pytest.raises(ContractError):
        check_oracle(lambda u, v: 0.0)
    with pytest.raises(ContractError, match=r"\[0, 1\]"):
        check_oracle(_Broken(), 4)


def test_check_labels_and_epsilon():
    assert check_labels([0, 1, 1], 3).dtype == np.int64
    with pytest.raises(ContractError):
        check_labels([0, 1], 3)
    with pytest.raises(ContractError):
        check_labels([0.5, 1, 1], 3)
    assert check_epsilon(0.1) == 0.1
    for bad in (0.0, 0.25, -1):
        with pytest.raises(ParameterError):
            check_epsilon(bad)
