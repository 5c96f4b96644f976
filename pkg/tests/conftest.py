import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st
from scipy import sparse

from dsdkit.graph import WeightedGraph

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_connected_weights(rng, n, p=0.3, weighted=True, loops=False):
    """Random symmetric weights with a spanning path, so the graph is connected."""
    W = np.triu(rng.random((n, n)) < p, 1).astype(float)
    perm = rng.permutation(n)
    W[np.minimum(perm[:-1], perm[1:]), np.maximum(perm[:-1], perm[1:])] = 1.0
    if weighted:
        W *= rng.uniform(0.2, 3.0, (n, n))
    W = W + W.T
    if loops:
        W[np.diag_indices(n)] = rng.uniform(0.0, 1.0, n)
    return W


def graph_from_dense(W, ids=None):
    n = len(W)
    return WeightedGraph(tuple(ids or (str(i) for i in range(n))), sparse.csr_matrix(W))


@st.composite
def connected_graphs(draw, min_n=3, max_n=25):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.05, 0.9))
    loops = draw(st.booleans())
    W = random_connected_weights(np.random.default_rng(seed), n, p, loops=loops)
    return W


@pytest.fixture
def k3():
    W = np.ones((3, 3)) - np.eye(3)
    return graph_from_dense(W)


@pytest.fixture
def lazy_k3():
    # off-diagonal 1 and self-loop 2 give P = I/2 + (J - I)/4
    W = np.ones((3, 3)) + np.eye(3)
    return graph_from_dense(W)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
