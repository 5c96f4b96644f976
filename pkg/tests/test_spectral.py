import numpy as np
import pytest
from hypothesis import given

from dsdkit.graph import diffusion_operator
from dsdkit.spectral import ConvergenceError, eig_full, eig_topk, lanczos_largest, residuals
from dsdkit import synth

from conftest import connected_graphs, graph_from_dense
from oracles import walk


@given(connected_graphs())
def test_full_basis_matches_general_eigensolver(W):
    op = diffusion_operator(graph_from_dense(W))
    b = eig_full(op)
    P, _ = walk(W)
    lam = np.sort(np.real(np.linalg.eigvals(P)))[::-1]
    assert np.allclose(b.lam, lam, atol=1e-9)
    assert b.mu[0] == 0.0
    assert np.allclose(b.psi[:, 0], 1.0)
    assert np.allclose(b.varphi[:, 0], op.pi)
    # psi are right and varphi left eigenvectors of P
    assert np.allclose(P @ b.psi, b.psi * b.lam, atol=1e-9)
    assert np.allclose(b.varphi.T @ P, (b.varphi * b.lam).T, atol=1e-9)
    # biorthogonality
    assert np.allclose(b.psi.T @ b.varphi, np.eye(op.n), atol=1e-9)


def test_spectrum_of_k3(k3):
    b = eig_full(diffusion_operator(k3))
    assert np.allclose(b.mu, [0.0, 1.5, 1.5])


@pytest.fixture(scope="module")
def sbm_op():
    g, _ = synth.gen_hsbm(synth.SbmSpec((120, 120, 120, 120), np.full((4, 4), 0.01) + 0.2 * np.eye(4), seed=3))
    return diffusion_operator(g)


@pytest.mark.parametrize("method", ["arpack", "lanczos"])
def test_iterative_solvers_agree_with_dense(sbm_op, method):
    M = 12
    dense = eig_full(sbm_op)
    b = eig_topk(sbm_op, M, method=method, seed=1)
    assert b.M == M
    assert np.allclose(b.mu, dense.mu[:M], atol=1e-9)
    assert residuals(sbm_op, b)[1:].max() < 1e-8
    # invariant subspaces agree even where eigenvectors are only defined up to sign
    for l in range(1, M):
        assert abs(abs(b.phi[:, l] @ dense.phi[:, l]) - 1.0) < 1e-6 or dense.mu[l + 1] - dense.mu[l] < 1e-6


def test_arpack_and_lanczos_agree(sbm_op):
    a = eig_topk(sbm_op, 8, method="arpack")
    z = eig_topk(sbm_op, 8, method="lanczos")
    assert np.allclose(a.mu, z.mu, atol=1e-10)


def test_seeded_solve_is_deterministic(sbm_op):
    a = eig_topk(sbm_op, 6, method="arpack", seed=5)
    b = eig_topk(sbm_op, 6, method="arpack", seed=5)
    assert np.array_equal(a.mu, b.mu) and np.array_equal(a.phi, b.phi)


def test_exhausted_budget_raises_with_residuals(sbm_op):
    with pytest.raises(ConvergenceError) as info:
        eig_topk(sbm_op, 10, method="lanczos", max_matvecs=15, tol=1e-14)
    assert info.value.residuals is not None


def test_requesting_everything_uses_dense(k3):
    b = eig_topk(diffusion_operator(k3), 3)
    assert b.complete


def test_lanczos_largest_on_diagonal_matrix():
    d = np.linspace(0, 1, 200)
    vals, vecs, res = lanczos_largest(lambda x: d * x, 200, 5, seed=0)
    assert np.allclose(vals, d[::-1][:5], atol=1e-10)
    assert np.allclose(vecs.T @ vecs, np.eye(5), atol=1e-10)
    assert res.max() < 1e-8


def test_bad_arguments(k3):
    op = diffusion_operator(k3)
    with pytest.raises(ValueError):
        eig_topk(op, 0)
    with pytest.raises(ValueError):
        eig_topk(op, 2, method="magic")
