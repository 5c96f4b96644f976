import numpy as np
import pytest
from hypothesis import given
from scipy import sparse

from dsdkit.graph import (
    GraphError,
    WeightedGraph,
    build_graph_from_edges,
    build_graph_from_kernel,
    diffusion_operator,
    largest_connected_component,
)

from conftest import connected_graphs, graph_from_dense


def test_edges_merge_duplicates_by_maximum():
    g = build_graph_from_edges([("a", "b", 1.0), ("b", "a", 3.0), ("b", "c")])
    assert g.node_ids == ("a", "b", "c")
    assert g.weights[0, 1] == 3.0 and g.weights[1, 0] == 3.0
    assert g.weights[1, 2] == 1.0


def test_self_loop_counted_once_in_degree():
    g = build_graph_from_edges([("a", "a", 2.0), ("a", "b", 1.0)])
    assert g.degrees.tolist() == [3.0, 1.0]
    assert g.num_edges == 1
    assert len(g.edges(include_self_loops=True)[0]) == 2


@pytest.mark.parametrize("edges", [[("a", "b", -1.0)], [("a", "b", float("nan"))], []])
def test_bad_edge_lists_rejected(edges):
    with pytest.raises(GraphError):
        build_graph_from_edges(edges)


def test_asymmetric_or_duplicate_ids_rejected():
    with pytest.raises(GraphError):
        WeightedGraph(("a", "b"), sparse.csr_matrix(np.array([[0, 1.0], [2.0, 0]])))
    with pytest.raises(GraphError):
        WeightedGraph(("a", "a"), sparse.csr_matrix(np.array([[0, 1.0], [1.0, 0]])))


def test_kernel_graph_weights():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    g = build_graph_from_kernel(pts, sigma=2.0)
    W = g.weights.toarray()
    assert np.allclose(np.diag(W), 1.0)
    assert W[0, 1] == pytest.approx(np.exp(-1 / 4))
    assert W[1, 2] == pytest.approx(np.exp(-5 / 4))
    with pytest.raises(GraphError):
        build_graph_from_kernel(pts, sigma=0.0)


def test_largest_component_ties_to_smallest_index():
    g = build_graph_from_edges([("x", "y"), ("a", "b"), ("c", "c")])
    lcc = largest_connected_component(g)
    assert lcc.node_ids == ("x", "y")
    assert lcc.is_connected()


def test_disconnected_graph_refused_by_operator():
    g = build_graph_from_edges([("a", "b"), ("c", "d")])
    with pytest.raises(GraphError, match="disconnected"):
        diffusion_operator(g)
    with pytest.raises(GraphError, match="zero-degree"):
        diffusion_operator(graph_from_dense(np.zeros((2, 2))))


@given(connected_graphs())
def test_operator_is_stochastic_with_stationary_pi(W):
    op = diffusion_operator(graph_from_dense(W))
    P = op.dense()
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert np.allclose(op.pi @ P, op.pi, atol=1e-12)
    assert op.pi.sum() == pytest.approx(1.0)
    # detailed balance: pi_i P_ij = pi_j P_ji
    F = op.pi[:, None] * P
    assert np.allclose(F, F.T, atol=1e-14)


@given(connected_graphs())
def test_same_as_ignores_node_order(W):
    g = graph_from_dense(W)
    perm = np.random.default_rng(0).permutation(g.n)
    h = graph_from_dense(W[np.ix_(perm, perm)], [g.node_ids[i] for i in perm])
    assert g.same_as(h)
