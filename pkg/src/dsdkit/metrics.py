"""
Pairwise graph distances
========================

Diffusion state distance (DSD) by three routes:

* :func:`dsd_exact` -- rows of the regularized inverse Laplacian
  ``(I - P + 1 pi)^-1`` measured in a weighted l2 norm;
* :func:`dsd_spectral` -- the eigen-expansion with weights ``1 / mu_l``;
* :func:`dsd_embedding` / :func:`dsd_truncated` -- the same expansion cut
  after ``M`` eigenpairs, giving low-dimensional coordinates.

Also diffusion distances at fixed time, commute distance, degree distance and
the partial Neumann sums used as an independent check of the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, gmres
from scipy.spatial.distance import pdist, squareform

from .graph import DiffusionOperator, WeightedGraph
from .spectral import SpectralBasis, eig_full

WEIGHT_MODES = ("inverse_pi", "one")
DENSE_SOLVE_LIMIT = 2000


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray
    kind: str
    node_ids: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class DsdEmbedding:
    """Row ``i`` holds ``(psi_2(x_i) / mu_2, ..., psi_M(x_i) / mu_M)``."""

    coords: np.ndarray
    M: int
    weight_mode: str = "inverse_pi"
    node_ids: tuple[str, ...] | None = None


def pairwise_distances(Y: np.ndarray, block: int = 256) -> np.ndarray:
    """Euclidean distances between the rows of ``Y``.

    Small problems use exact coordinate differences. Large ones use the Gram
    identity on centered coordinates, evaluated in cache-sized row blocks of
    the upper triangle and mirrored so the result is exactly symmetric.
    """
    Y = np.asarray(Y, dtype=float)
    n, d = Y.shape
    if n < 2:
        return np.zeros((n, n))
    if n * n * max(d, 1) <= 5e7:
        return squareform(pdist(Y))
    Yc = Y - Y.mean(axis=0)
    sq = np.einsum("ij,ij->i", Yc, Yc)
    out = np.empty((n, n))
    for a in range(0, n, block):
        b = min(n, a + block)
        G = Yc[a:b] @ Yc[a:].T
        G *= -2.0
        G += sq[a:b, None]
        G += sq[None, a:]
        np.maximum(G, 0.0, out=G)
        np.sqrt(G, out=G)
        diag = G[:, : b - a]
        out[a:b, a:b] = np.triu(diag) + np.triu(diag, 1).T
        out[a:b, b:] = G[:, b - a:]
        out[b:, a:b] = G[:, b - a:].T
    np.fill_diagonal(out, 0.0)
    return out


def _weights(op: DiffusionOperator, weight_mode: str) -> np.ndarray:
    if weight_mode == "inverse_pi":
        return 1.0 / op.pi
    if weight_mode == "one":
        return np.ones(op.n)
    raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}, got {weight_mode!r}")


def regularized_inverse(op: DiffusionOperator, tol: float = 1e-10) -> np.ndarray:
    """``(I - P + 1 pi)^-1`` as a dense array.

    Dense LU up to ``n = 2000``; above that each row is found by GMRES on the
    transposed system.
    """
    n = op.n
    if n <= DENSE_SOLVE_LIMIT:
        A = np.eye(n) - op.dense()
        A += op.pi[None, :]
        try:
            return sla.inv(A, overwrite_a=True, check_finite=False)
        except sla.LinAlgError as exc:  # pragma: no cover - irreducible P cannot get here
            raise RuntimeError("regularized Laplacian is singular; is the graph connected?") from exc
    PT = op.P.T.tocsr()
    pi = op.pi

    def rmatvec(x):
        # (I - P + 1 pi)^T x = x - P^T x + pi^T (1^T x)
        return x - PT @ x + pi * x.sum()

    AT = LinearOperator((n, n), matvec=rmatvec, dtype=float)
    G = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        x, info = gmres(AT, e, rtol=tol, atol=0.0, restart=min(n, 200), maxiter=50)
        if info != 0:
            raise RuntimeError(f"GMRES failed for row {i} (info={info})")
        G[i] = x
    return G


def dsd_exact(op: DiffusionOperator, weight_mode: str = "inverse_pi") -> DistanceMatrix:
    """DSD from the regularized inverse Laplacian.

    ``D(x_i, x_j) = ||(e_i - e_j)(I - P + 1 pi)^-1||_{l2(w)}`` with ``w = 1/pi``
    (default) or ``w = 1``. Valid for any connected graph, periodic or not.
    """
    w = _weights(op, weight_mode)
    G = regularized_inverse(op)
    G *= np.sqrt(w)[None, :]
    return DistanceMatrix(pairwise_distances(G), "dsd_exact", op.graph.node_ids)


def dsd_spectral(basis: SpectralBasis, node_ids=None) -> DistanceMatrix:
    """DSD (weight ``1/pi``) from a complete eigenbasis."""
    if not basis.complete:
        raise ValueError("dsd_spectral needs all n eigenpairs; use dsd_truncated for M < n")
    emb = dsd_embedding(basis, node_ids=node_ids)
    return DistanceMatrix(pairwise_distances(emb.coords), "dsd_spectral", node_ids)


def dsd_embedding(basis: SpectralBasis, M: int | None = None, node_ids=None) -> DsdEmbedding:
    """Coordinates ``x -> (psi_l(x) / mu_l)_{l=2..M}``."""
    M = basis.M if M is None else M
    if not 2 <= M <= basis.M:
        raise ValueError(f"M must be between 2 and {basis.M}")
    if basis.mu[1] <= 1e-12:
        raise ValueError("second eigenvalue is zero: the graph is disconnected")
    coords = basis.psi[:, 1:M] / basis.mu[1:M]
    return DsdEmbedding(coords=coords, M=M, node_ids=node_ids)


def dsd_truncated(emb: DsdEmbedding) -> DistanceMatrix:
    return DistanceMatrix(pairwise_distances(emb.coords), "dsd_truncated", emb.node_ids)


def laplacian_eigenmap(basis: SpectralBasis, M: int | None = None) -> np.ndarray:
    """Unweighted coordinates ``(psi_2, ..., psi_M)`` for comparison with DSD."""
    M = basis.M if M is None else M
    return basis.psi[:, 1:M].copy()


def diffusion_distance(op: DiffusionOperator, basis: SpectralBasis, t: int) -> DistanceMatrix:
    """Diffusion distance ``D_t`` in ``l2(1/pi)`` via ``sum_l lambda_l^(2t) (psi_l(i) - psi_l(j))^2``.

    With a truncated basis the sum runs over the available pairs only.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    coords = basis.psi[:, 1:] * basis.lam[1:] ** t
    return DistanceMatrix(pairwise_distances(coords), "diffusion_t", op.graph.node_ids)


def diffusion_distance_direct(op: DiffusionOperator, t: int, measure: str = "inverse_pi") -> DistanceMatrix:
    """Diffusion distance from the rows of ``P^t``.

    ``measure="inverse_pi"`` is the usual ``l2(1/pi)`` norm; ``"counting"``
    uses the plain l2 norm.
    """
    Pt = np.linalg.matrix_power(op.dense(), int(t))
    if measure == "inverse_pi":
        Pt = Pt / np.sqrt(op.pi)[None, :]
    elif measure != "counting":
        raise ValueError("measure must be 'inverse_pi' or 'counting'")
    return DistanceMatrix(pairwise_distances(Pt), "diffusion_t", op.graph.node_ids)


def commute_distance(g: WeightedGraph) -> DistanceMatrix:
    """``<e_i - e_j, L_sym^+ (e_i - e_j)>`` with the pseudoinverse of ``L_sym``.

    This is the normalized-Laplacian quadratic form; the classical commute
    time would use the combinatorial Laplacian instead.
    """
    from .graph import diffusion_operator

    basis = eig_full(diffusion_operator(g))
    phi = basis.phi[:, 1:]
    Lp = (phi / basis.mu[1:]) @ phi.T
    d = np.diag(Lp)
    C = d[:, None] + d[None, :] - 2.0 * Lp
    np.fill_diagonal(C, 0.0)
    C = np.maximum(0.5 * (C + C.T), 0.0)
    return DistanceMatrix(C, "commute", g.node_ids)


def degree_distance(g: WeightedGraph) -> DistanceMatrix:
    """``|1/D_i - 1/D_j|``."""
    d = g.degrees
    if np.any(d <= 0):
        raise ValueError("degree distance needs positive degrees")
    inv = 1.0 / d
    return DistanceMatrix(np.abs(inv[:, None] - inv[None, :]), "degree", g.node_ids)


def neumann_partial_sum(op: DiffusionOperator, T: int, i: int, j: int) -> np.ndarray:
    """``(e_i - e_j) sum_{t=0}^{T} P^t``.

    Converges to ``(e_i - e_j)(I - P + 1 pi)^-1`` at rate ``|lambda_2|^T``
    when every nontrivial eigenvalue of ``P`` has modulus below one; it does
    not converge on bipartite graphs.
    """
    PT = op.P.T.tocsr()
    v = np.zeros(op.n)
    v[i] += 1.0
    v[j] -= 1.0
    acc = v.copy()
    for _ in range(int(T)):
        v = PT @ v
        acc += v
    return acc


def neumann_horizon(op: DiffusionOperator, basis: SpectralBasis, eps: float = 1e-12) -> int:
    """Smallest ``T`` with ``|lambda_2|^T <= eps``, using the largest nontrivial modulus."""
    lam = np.max(np.abs(basis.lam[1:]))
    # eigenvalues within rounding of -1 (bipartite graphs) count as unit modulus
    if lam >= 1.0 - 1e-10:
        raise ValueError("P has a nontrivial unit-modulus eigenvalue; the series diverges")
    if lam == 0.0:
        return 1
    return int(np.ceil(np.log(eps) / np.log(lam)))


def green_function(basis: SpectralBasis) -> np.ndarray:
    """``G_ij = sum_{l >= 2} psi_l(i) varphi_l(j) / (1 - lambda_l)``."""
    if not basis.complete:
        raise ValueError("the Green's function needs a complete basis")
    return (basis.psi[:, 1:] / basis.mu[1:]) @ basis.varphi[:, 1:].T


def random_walk_laplacian(op: DiffusionOperator) -> np.ndarray:
    return np.eye(op.n) - op.dense()
