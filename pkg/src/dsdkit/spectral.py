"""
Spectral data of the diffusion operator
=======================================

Eigenpairs ``(mu, phi)`` of the symmetric normalized Laplacian
``L_sym = I - D^-1/2 W D^-1/2`` and the derived random-walk quantities
``lambda = 1 - mu`` and ``psi = phi / sqrt(pi)`` (right eigenvectors of ``P``).

Complete bases come from a dense symmetric eigensolver. For the ``M``
smallest pairs of large sparse graphs there are two restarted Lanczos
solvers: ARPACK's implicitly restarted iteration (the default) and a
thick-restart implementation in numpy, kept as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .graph import DiffusionOperator

DENSE_LIMIT = 5000
DEGENERACY_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Raised when the iterative eigensolver exhausts its budget."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SpectralBasis:
    """The ``M`` smallest eigenpairs of ``L_sym``, ascending in ``mu``."""

    mu: np.ndarray
    phi: np.ndarray
    pi: np.ndarray

    @property
    def M(self) -> int:
        return len(self.mu)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def lam(self) -> np.ndarray:
        """Eigenvalues of ``P``."""
        return 1.0 - self.mu

    @property
    def psi(self) -> np.ndarray:
        """Right eigenvectors of ``P``; ``psi[:, 0]`` is the constant one vector."""
        return self.phi / np.sqrt(self.pi)[:, None]

    @property
    def varphi(self) -> np.ndarray:
        """Left eigenvectors of ``P``; ``varphi[:, 0] == pi``."""
        return self.phi * np.sqrt(self.pi)[:, None]

    @property
    def complete(self) -> bool:
        return self.M == self.n


def normalized_adjacency(op: DiffusionOperator) -> sparse.csr_matrix:
    """``D^-1/2 W D^-1/2``, symmetric and similar to ``P``."""
    s = 1.0 / np.sqrt(op.degrees)
    A = sparse.diags(s) @ op.graph.weights @ sparse.diags(s)
    A = sparse.csr_matrix(A)
    return (A + A.T) * 0.5


def sym_laplacian(op: DiffusionOperator) -> sparse.csr_matrix:
    return sparse.csr_matrix(sparse.identity(op.n) - normalized_adjacency(op))


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs


def _finish(mu: np.ndarray, phi: np.ndarray, op: DiffusionOperator) -> SpectralBasis:
    order = np.argsort(mu, kind="stable")
    mu = np.array(mu[order], dtype=float)
    phi = np.array(phi[:, order], dtype=float)
    # the kernel of L_sym is known exactly: sqrt(pi), with mu = 0
    phi[:, 0] = np.sqrt(op.pi)
    mu[0] = 0.0
    np.clip(mu, 0.0, 2.0, out=mu)
    phi[:, 1:] = _fix_signs(phi[:, 1:])
    return SpectralBasis(mu=mu, phi=phi, pi=op.pi.copy())


def eig_full(op: DiffusionOperator) -> SpectralBasis:
    """All ``n`` eigenpairs of ``L_sym`` by dense symmetric diagonalization."""
    if op.n > DENSE_LIMIT:
        raise ValueError(
            f"n = {op.n} exceeds the dense limit of {DENSE_LIMIT}; use eig_topk(op, M)"
        )
    L = sym_laplacian(op).toarray()
    L = 0.5 * (L + L.T)
    mu, phi = eigh(L)
    return _finish(mu, phi, op)


def eig_topk(op: DiffusionOperator, M: int, method: str = "auto", tol: float = 1e-8,
             max_matvecs: int | None = None, seed: int = 0) -> SpectralBasis:
    """The ``M`` smallest eigenpairs of ``L_sym``.

    Parameters
    ----------
    op : DiffusionOperator
    M : int
        Number of pairs, ``2 <= M <= n``. The trivial pair ``(0, sqrt(pi))`` is
        always the first.
    method : {"auto", "arpack", "lanczos", "dense"}
        ``"auto"`` uses the dense solver when ``M`` is a sizeable fraction of
        ``n`` or ``n`` is small, ARPACK otherwise.
    tol : float
        Required residual ``||L_sym phi - mu phi||_2`` for every pair.
    max_matvecs : int, optional
        Budget of operator applications, default ``max(50 * M, 400)``.

    Raises
    ------
    ConvergenceError
        If the budget runs out or a pair misses ``tol``; ``residuals`` holds
        the per-pair residuals reached.
    """
    n = op.n
    if not 2 <= M <= n:
        raise ValueError(f"M must satisfy 2 <= M <= n = {n}, got {M}")
    if method == "auto":
        method = "dense" if (n <= 400 or 3 * M >= n) and n <= DENSE_LIMIT else "arpack"
    if method == "dense":
        full = eig_full(op)
        return SpectralBasis(mu=full.mu[:M].copy(), phi=full.phi[:, :M].copy(), pi=full.pi)
    if method not in ("arpack", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    if max_matvecs is None:
        max_matvecs = max(50 * M, 400)
    if M >= n - 1:
        # Krylov solvers need room outside the wanted subspace
        full = eig_full(op)
        return SpectralBasis(mu=full.mu[:M].copy(), phi=full.phi[:, :M].copy(), pi=full.pi)

    A = normalized_adjacency(op)
    q0 = np.sqrt(op.pi)
    if method == "arpack":
        mu, phi = _arpack_smallest(A, M, tol, max_matvecs, seed)
    else:
        def shifted(X):
            # I + A has the spectrum 2 - mu in [0, 2]; its top end is the bottom of L_sym
            return X + A @ X

        theta, V, _ = lanczos_largest(shifted, n, M - 1, deflate=q0[:, None], tol=tol,
                                      max_matvecs=max_matvecs, seed=seed)
        mu = np.concatenate([[0.0], 2.0 - theta])
        phi = np.column_stack([q0, V])
    basis = _finish(mu, phi, op)
    res = residuals(op, basis)
    if np.any(res[1:] >= tol):
        raise ConvergenceError(
            f"eigenpairs missed the residual tolerance {tol:.1e}; max residual {res.max():.3e}",
            residuals=res,
        )
    return basis


def _arpack_smallest(A, M, tol, max_matvecs, seed):
    n = A.shape[0]
    ncv = min(n, max(2 * M + 1, 20))
    count = [0]

    def mv(x):
        count[0] += 1
        return A @ x

    op = LinearOperator((n, n), matvec=mv, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    # ARPACK counts restarts, not products; each restart costs ncv - M products
    maxiter = max(1, max_matvecs // max(1, ncv - M))
    try:
        # the largest eigenvalues of D^-1/2 W D^-1/2 are 1 - mu for the smallest mu.
        # ARPACK's tolerance is relative to the Ritz value, which lies in [-1, 1]
        theta, V = eigsh(op, k=M, which="LA", tol=0.1 * tol, ncv=ncv, v0=v0, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        V = exc.eigenvectors
        res = np.linalg.norm(A @ V - V * exc.eigenvalues, axis=0) if V.size else None
        raise ConvergenceError(
            f"ARPACK did not converge within {count[0]} operator applications "
            f"({len(exc.eigenvalues)} of {M} pairs converged)",
            residuals=res,
        ) from exc
    return 1.0 - theta, V


def lanczos_largest(matvec, n: int, k: int, deflate: np.ndarray | None = None, tol: float = 1e-8,
                    ncv: int | None = None, max_matvecs: int = 10_000, seed: int = 0):
    """Largest ``k`` eigenpairs of a symmetric operator by thick-restart Lanczos.

    The Krylov basis is kept fully orthogonal (two passes of classical
    Gram-Schmidt) and orthogonal to the columns of ``deflate``. The images
    ``A v`` of basis vectors are stored, so Ritz residuals are evaluated
    explicitly rather than estimated.

    Returns
    -------
    theta : (k,) ndarray
        Ritz values in descending order.
    X : (n, k) ndarray
        Orthonormal Ritz vectors.
    residuals : (k,) ndarray
        ``||A x - theta x||_2`` per pair.
    """
    rng = np.random.default_rng(seed)
    # bases are stored row-wise so each Krylov vector is contiguous
    Qt = np.zeros((0, n)) if deflate is None else np.linalg.qr(deflate)[0].T.copy()
    avail = n - Qt.shape[0]
    if k > avail:
        raise ValueError("more eigenpairs requested than the deflated space holds")
    if ncv is None:
        ncv = min(avail, max(2 * k + 10, k + 30))
    ncv = max(min(ncv, avail), k)

    def orth(w, basis):
        # classical Gram-Schmidt, repeated only when cancellation was severe
        for _ in range(3):
            norm0 = np.linalg.norm(w)
            if Qt.shape[0]:
                w = w - (Qt @ w) @ Qt
            if basis.shape[0]:
                w = w - (basis @ w) @ basis
            if np.linalg.norm(w) > 0.7071 * norm0:
                break
        return w

    def fresh(basis):
        for _ in range(10):
            w = orth(rng.standard_normal(n), basis)
            nw = np.linalg.norm(w)
            if nw > 1e-8:
                return w / nw
        raise ConvergenceError("could not extend the Krylov basis")

    Vt = np.zeros((ncv, n))
    AVt = np.zeros((ncv, n))
    Vt[0] = fresh(Vt[:0])
    j = 0
    matvecs = 0
    while True:
        while j < ncv:
            w = matvec(Vt[j])
            matvecs += 1
            AVt[j] = w
            j += 1
            if j == ncv:
                break
            w = orth(w, Vt[:j])
            beta = np.linalg.norm(w)
            if beta < 1e-12 * max(1.0, np.linalg.norm(AVt[j - 1])):
                Vt[j] = fresh(Vt[:j])
            else:
                Vt[j] = w / beta
        H = Vt @ AVt.T
        H = 0.5 * (H + H.T)
        evals, Y = np.linalg.eigh(H)
        evals = evals[::-1]
        Yt = np.ascontiguousarray(Y[:, ::-1].T)
        Xt = Yt[:k] @ Vt
        R = Yt[:k] @ AVt - evals[:k, None] * Xt
        res = np.linalg.norm(R, axis=1)
        theta = evals[:k]
        # a basis spanning the whole deflated space makes Rayleigh-Ritz exact
        if np.all(res < tol) or ncv == avail:
            break
        if matvecs >= max_matvecs:
            raise ConvergenceError(
                f"Lanczos did not converge in {matvecs} operator applications; "
                f"max residual {res.max():.3e} (tol {tol:.1e})",
                residuals=res,
            )
        keep = min(ncv - 2, k + (ncv - k) // 2)
        # next direction: the part of A v_last outside the current subspace
        w = AVt[ncv - 1] - (Vt @ AVt[ncv - 1]) @ Vt
        Vt[:keep] = Yt[:keep] @ Vt
        AVt[:keep] = Yt[:keep] @ AVt
        Vt[keep:] = 0.0
        AVt[keep:] = 0.0
        w = orth(w, Vt[:keep])
        nw = np.linalg.norm(w)
        Vt[keep] = w / nw if nw > 1e-12 else fresh(Vt[:keep])
        j = keep
    return theta, Xt.T, res


def residuals(op: DiffusionOperator, basis: SpectralBasis) -> np.ndarray:
    """Per-pair residual ``||L_sym phi - mu phi||_2``."""
    L = sym_laplacian(op)
    return np.linalg.norm(L @ basis.phi - basis.phi * basis.mu, axis=0)
