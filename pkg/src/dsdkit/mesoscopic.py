"""
Mesoscopic equilibria of a random walk
======================================

Given a partition of the nodes, the stochastic complement ``S`` watches the
walk only inside each block and reroutes excursions back in. Its limit
``S_inf`` (block-wise rank one) approximates ``P^t`` over a window of times:

    ||P^t - S_inf||_inf <= delta t + kappa lambda_*^t

with ``delta`` the off-block mass, ``kappa`` the conditioning of the
eigenvector matrix of ``S`` and ``lambda_*`` the slowest within-block mixing
rate. This module computes those certificates, the admissible time windows,
the l1/l2 comparison factor ``gamma`` and the two-sided bounds on
accumulated row differences across several partitions used in turn.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from .graph import DiffusionOperator
from .metrics import DistanceMatrix, regularized_inverse

PRIMITIVE_TOL = 1e-12
TAIL_TOL = 1e-9


class CertificateError(RuntimeError):
    """Raised when a bound cannot be certified."""


class Partition:
    """Assignment of ``n`` nodes to ``K`` nonempty blocks.

    Labels may be any integers; they are recoded to ``0..K-1`` in sorted
    order of the original values.
    """

    def __init__(self, labels):
        raw = np.asarray(labels)
        if raw.ndim != 1 or raw.size == 0:
            raise ValueError("labels must be a nonempty 1-D sequence")
        _, codes = np.unique(raw, return_inverse=True)
        self.labels = codes.astype(int)
        self.labels.setflags(write=False)
        self.K = int(codes.max()) + 1
        self.blocks = [np.flatnonzero(self.labels == k) for k in range(self.K)]

    @property
    def n(self) -> int:
        return len(self.labels)

    def same_block(self, i: int, j: int) -> bool:
        return self.labels[i] == self.labels[j]

    def refines(self, other: "Partition") -> bool:
        """True if every block of ``self`` lies inside a block of ``other``."""
        return all(len(np.unique(other.labels[b])) == 1 for b in self.blocks)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"Partition(n={self.n}, K={self.K})"


@dataclass(frozen=True)
class MesoscopicCertificate:
    partition: Partition
    S: np.ndarray
    S_inf: np.ndarray
    delta: float
    kappa: float
    lambda_star: float
    block_pi: tuple[np.ndarray, ...]
    eigenvalues: np.ndarray
    Z: np.ndarray = field(repr=False)
    Zinv: np.ndarray = field(repr=False)
    warnings: tuple[str, ...] = ()


def _inf_norm(A: np.ndarray) -> float:
    return float(np.abs(A).sum(axis=1).max())


def _block_stationary(Skk: np.ndarray, seed: np.ndarray, tol: float = 1e-12, max_iter: int = 20_000):
    """Stationary row vector of ``Skk`` by power iteration from ``seed``."""
    v = seed / seed.sum()
    for _ in range(max_iter):
        w = v @ Skk
        w /= w.sum()
        if np.abs(w - v).sum() < tol:
            return w
        v = w
    # slow mixing: fall back to the null space of (Skk^T - I)
    A = Skk.T - np.eye(len(v))
    A[-1] = 1.0
    b = np.zeros(len(v))
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def stochastic_complement(op: DiffusionOperator, part: Partition) -> MesoscopicCertificate:
    """Stochastic complement of ``P`` on ``part`` and the envelope parameters.

    ``S_kk = P_kk + P_k* (I - P_k)^-1 P_*k`` with ``P_k`` the principal
    submatrix on the complement of block ``k``. The diagonalizer ``Z`` of
    ``S`` is assembled from the symmetrized blocks
    ``diag(sqrt(pi_k)) S_kk diag(1/sqrt(pi_k))``, which are symmetric when
    ``P`` is reversible.
    """
    if part.n != op.n:
        raise ValueError("partition size does not match the operator")
    P = op.dense()
    n = op.n
    notes: list[str] = []
    S = np.zeros((n, n))
    S_inf = np.zeros((n, n))
    Z = np.zeros((n, n))
    Zinv = np.zeros((n, n))
    eigs = []
    block_pi = []
    off_mass = 0.0
    for k, idx in enumerate(part.blocks):
        rest = np.setdiff1d(np.arange(n), idx, assume_unique=True)
        Skk = P[np.ix_(idx, idx)].copy()
        if len(rest):
            Pkr = P[np.ix_(idx, rest)]
            off_mass = max(off_mass, float(Pkr.sum(axis=1).max()))
            A = np.eye(len(rest)) - P[np.ix_(rest, rest)]
            B = P[np.ix_(rest, idx)]
            with warnings.catch_warnings():
                # near-closed classes in the complement make A ill-conditioned; LU stays
                # backward stable and the error is damped by the tiny entries of Pkr
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                try:
                    X = sla.solve(A, B, check_finite=False)
                except sla.LinAlgError:
                    X = sla.lstsq(A, B, check_finite=False)[0]
                    notes.append(f"block {k}: complement matrix singular, used least squares")
            Skk += Pkr @ X
        rowsum_err = float(np.abs(Skk.sum(axis=1) - 1.0).max())
        if rowsum_err > 1e-10:
            notes.append(f"block {k}: rows sum to 1 only within {rowsum_err:.1e}")
        pik = _block_stationary(Skk, op.pi[idx].copy())
        block_pi.append(pik)
        S[np.ix_(idx, idx)] = Skk
        S_inf[np.ix_(idx, idx)] = np.tile(pik, (len(idx), 1))

        r = np.sqrt(np.maximum(pik, 0.0))
        As = Skk * r[:, None] / r[None, :]
        asym = float(np.abs(As - As.T).max())
        if asym < 1e-8:
            ev, U = np.linalg.eigh(0.5 * (As + As.T))
            Zk = U / r[:, None]
            Zk_inv = U.T * r[None, :]
        else:
            notes.append(f"block {k}: not reversible (asymmetry {asym:.1e}); general eigendecomposition")
            ev, Zk = np.linalg.eig(Skk)
            Zk_inv = np.linalg.inv(Zk)
            ev = ev.real if np.abs(ev.imag).max() < 1e-12 else ev
        Z[np.ix_(idx, idx)] = np.real_if_close(Zk)
        Zinv[np.ix_(idx, idx)] = np.real_if_close(Zk_inv)
        mags = np.sort(np.abs(ev))[::-1]
        if len(mags) > 1 and mags[1] > 1.0 - PRIMITIVE_TOL:
            notes.append(f"block {k}: not primitive (|lambda_2| = {mags[1]:.15f})")
        eigs.append(ev)

    ev_all = np.concatenate(eigs)
    mags = np.sort(np.abs(ev_all))[::-1]
    # eigenvalues of a stochastic matrix lie in the unit disc; clip rounding above 1
    lam_star = min(1.0, float(mags[part.K])) if len(mags) > part.K else 0.0
    kappa = _inf_norm(Z) * _inf_norm(Zinv)
    return MesoscopicCertificate(
        partition=part, S=S, S_inf=S_inf, delta=2.0 * off_mass, kappa=kappa,
        lambda_star=lam_star, block_pi=tuple(block_pi), eigenvalues=ev_all, Z=Z, Zinv=Zinv,
        warnings=tuple(notes),
    )


def envelope_bound(cert: MesoscopicCertificate, t):
    """``delta t + kappa lambda_*^t``; ``t`` may be an array."""
    t = np.asarray(t, dtype=float)
    out = cert.delta * t + cert.kappa * cert.lambda_star ** t
    return float(out) if out.ndim == 0 else out


class TimeWindow(NamedTuple):
    tau1: float
    tau2: float

    def integers(self) -> np.ndarray:
        """Integers strictly inside the window (capped at a million entries)."""
        lo = int(np.floor(self.tau1)) + 1
        hi = int(np.ceil(self.tau2)) - 1 if np.isfinite(self.tau2) else lo + 10**6
        return np.arange(lo, min(hi, lo + 10**6) + 1)


def time_window(cert: MesoscopicCertificate, epsilon: float) -> TimeWindow | None:
    """Times ``tau1 < t < tau2`` at which ``||P^t - S_inf||_inf < epsilon`` is guaranteed.

    Returns ``None`` when ``tau1 >= tau2``. ``tau2`` is infinite when ``delta == 0``.
    """
    lam = cert.lambda_star
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda_* must lie in (0, 1), got {lam}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tau1 = np.log(2.0 * cert.kappa / epsilon) / np.log(1.0 / lam)
    tau2 = np.inf if cert.delta == 0 else epsilon / (2.0 * cert.delta)
    return TimeWindow(float(tau1), float(tau2)) if tau1 < tau2 else None


def comparability(u: np.ndarray) -> float:
    """``c_u``: the factor in ``||u||_2 = c_u ||u||_1 / sqrt(n)``."""
    u = np.asarray(u, dtype=float)
    n = len(u)
    nrm = np.linalg.norm(u)
    if nrm == 0:
        return 1.0
    s = np.sum((np.abs(u) / nrm - 1.0 / np.sqrt(n)) ** 2)
    return 1.0 / (1.0 - 0.5 * s)


def gamma(op: DiffusionOperator, cert: MesoscopicCertificate, t: int) -> float:
    """Largest ``c_u`` over the rows ``u`` of ``P^t - S_inf``; 1 if every row vanishes."""
    R = np.linalg.matrix_power(op.dense(), int(t)) - cert.S_inf
    vals = [comparability(u) for u in R if np.any(u)]
    return max(vals) if vals else 1.0


def cluster_separation(dist: DistanceMatrix | np.ndarray, part: Partition) -> tuple[float, float]:
    """Largest within-block distance and smallest between-block distance."""
    D = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist)
    if part.K < 2:
        raise ValueError("need at least two blocks")
    same = part.labels[:, None] == part.labels[None, :]
    d_in = float(D[same].max()) if same.sum() > part.n else 0.0
    d_btw = float(D[~same].min())
    return d_in, d_btw


def separation_bounds(cert: MesoscopicCertificate, epsilon: float, gamma_t: float) -> tuple[float, float]:
    """Bounds on within- and between-block diffusion distances (counting measure).

    Returns ``(2 e g / sqrt(n), 2 (m - e g / sqrt(n)))`` with ``e = epsilon``,
    ``g = gamma_t`` and ``m`` the smallest l2 norm of a row of ``S_inf``. The
    first bounds the largest within-block distance whenever
    ``||P^t - S_inf||_inf <= epsilon``.

    The second is the lower bound in its commonly quoted form. Rows of
    ``S_inf`` from different blocks have disjoint supports, so their l2
    distance is ``sqrt(a^2 + b^2)`` rather than ``a + b``; the guaranteed
    version is :func:`between_lower_bound`.
    """
    n = cert.S.shape[0]
    slack = epsilon * gamma_t / np.sqrt(n)
    m = float(np.linalg.norm(cert.S_inf, axis=1).min())
    return 2.0 * slack, 2.0 * (m - slack)


def between_lower_bound(cert: MesoscopicCertificate, epsilon: float, gamma_t: float) -> float:
    """``sqrt(2) m - 2 e g / sqrt(n)``: triangle inequality around the disjoint rows of ``S_inf``."""
    n = cert.S.shape[0]
    m = float(np.linalg.norm(cert.S_inf, axis=1).min())
    return np.sqrt(2.0) * m - 2.0 * epsilon * gamma_t / np.sqrt(n)


def residual_curve(op: DiffusionOperator, cert: MesoscopicCertificate, t_max: int):
    """Measured ``||P^t - S_inf||_inf`` and the envelope for ``t = 0..t_max``.

    Returns
    -------
    t, measured, bound : ndarray
    """
    P = op.dense()
    t = np.arange(t_max + 1)
    measured = np.empty(t_max + 1)
    Pt = np.eye(op.n)
    for s in t:
        measured[s] = _inf_norm(Pt - cert.S_inf)
        if s < t_max:
            Pt = Pt @ P
    return t, measured, envelope_bound(cert, t)


def residual_split(op: DiffusionOperator, cert: MesoscopicCertificate, t_max: int):
    """``||P^t - S^t||_inf`` and ``||S^t - S_inf||_inf`` for ``t = 0..t_max``.

    The first is bounded by ``delta t`` and the second by ``kappa lambda_*^t``.
    """
    P = op.dense()
    near = np.empty(t_max + 1)
    within = np.empty(t_max + 1)
    Pt = np.eye(op.n)
    St = np.eye(op.n)
    for s in range(t_max + 1):
        near[s] = _inf_norm(Pt - St)
        within[s] = _inf_norm(St - cert.S_inf)
        if s < t_max:
            Pt = Pt @ P
            St = St @ cert.S
    return near, within


# ---------------------------------------------------------------------------
# several partitions used in turn


@dataclass(frozen=True)
class ScaleAssignment:
    """Time bands ``[1, b_1), [b_1, b_2), ..., [b_{R-1}, inf)`` and their partitions."""

    boundaries: tuple[int, ...]
    partitions: tuple[Partition, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        parts = tuple(self.partitions)
        if len(parts) != len(b) + 1:
            raise ValueError("need exactly one more partition than boundaries")
        if any(x < 2 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ValueError("boundaries must be strictly increasing integers >= 2")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "partitions", parts)

    def bands(self) -> list[tuple[int, float]]:
        """``(first, last)`` time of each band; the last band ends at infinity."""
        starts = (1,) + self.boundaries
        ends = tuple(x - 1 for x in self.boundaries) + (np.inf,)
        return list(zip(starts, ends))

    def band_of(self, t: int) -> int:
        return int(np.searchsorted(self.boundaries, t, side="right"))


def _band_envelope_sum(cert: MesoscopicCertificate, a: int, b: float) -> float:
    """``sum_{t=a}^{b} (delta t + kappa lambda^t)`` in closed form; ``b`` may be infinite."""
    lam, kappa, delta = cert.lambda_star, cert.kappa, cert.delta
    if b < a:
        return 0.0
    if np.isinf(b):
        if delta > 0:
            return np.inf
        return 0.0 if lam == 0 else kappa * lam**a / (1.0 - lam)
    lin = delta * (a + b) * (b - a + 1) / 2.0
    if lam == 0:
        return lin
    # lambda^a - lambda^(b+1) without cancellation when lambda is close to 1
    geo = -kappa * np.exp(a * np.log(lam)) * np.expm1((b + 1 - a) * np.log(lam)) / (1.0 - lam)
    return lin + geo


def certified_horizon(cert: MesoscopicCertificate, start: int = 1, tol: float = TAIL_TOL) -> int:
    """Smallest ``T >= start`` with ``2 kappa lambda^(T+1) / (1 - lambda) < tol`` for a ``delta = 0`` certificate."""
    if cert.delta != 0:
        raise CertificateError("the tail is only summable for a certificate with delta = 0")
    lam = cert.lambda_star
    if lam == 0:
        return start
    if not lam < 1:
        raise CertificateError("lambda_* = 1: the walk never mixes")
    T = np.log(tol * (1.0 - lam) / (2.0 * cert.kappa)) / np.log(lam) - 1.0
    T = max(start, int(np.ceil(T)))
    while 2.0 * _band_envelope_sum(cert, T + 1, np.inf) >= tol:
        T += 1 + T // 1000
    return T


def _sum_of_powers(Q: np.ndarray, T: int) -> np.ndarray:
    """``sum_{t=1}^{T} Q^t`` by binary doubling: ``C(a + b) = C(a) + Q^a C(b)``."""
    n = len(Q)
    acc_pow, acc_sum = np.eye(n), np.zeros((n, n))
    cur_pow, cur_sum = Q.copy(), Q.copy()
    T = int(T)
    while T:
        if T & 1:
            acc_sum = acc_sum + acc_pow @ cur_sum
            acc_pow = acc_pow @ cur_pow
        T >>= 1
        if T:
            cur_sum = cur_sum + cur_pow @ cur_sum
            cur_pow = cur_pow @ cur_pow
    return acc_sum


class Sandwich(NamedTuple):
    lhs: float
    upper: float
    lower: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.lhs <= self.upper


class MultitemporalBounds:
    """Two-sided bounds on ``||sum_{t=1}^{T} (e_i - e_j) P^t||_1`` from a scale assignment.

    For every band the stochastic complement of its partition contributes
    ``(e_i - e_j) S_inf`` (zero for pairs sharing a block) and twice its
    envelope. With a finite ``T_max`` the last band must have ``delta = 0``,
    and ``T_max`` must lie in it with a tail ``2 sum_{t > T_max} envelope``
    below ``tail_tol``; ``T_max = inf`` uses the regularized inverse.
    """

    def __init__(self, op: DiffusionOperator, assign: ScaleAssignment, T_max: float = np.inf,
                 tail_tol: float = TAIL_TOL, certificates: Sequence[MesoscopicCertificate] | None = None):
        self.op = op
        self.assign = assign
        self.certs = list(certificates) if certificates is not None else [
            stochastic_complement(op, p) for p in assign.partitions]
        bands = assign.bands()
        last = self.certs[-1]
        if last.delta != 0:
            raise CertificateError(
                f"band {len(bands) - 1} (t >= {bands[-1][0]}) has delta = {last.delta:.3e}; "
                "the final band needs delta = 0 for a summable tail")
        if np.isinf(T_max):
            self.tail = 0.0
        else:
            T_max = int(T_max)
            if T_max < bands[-1][0]:
                raise CertificateError(
                    f"T_max = {T_max} ends before the final band starts at t = {bands[-1][0]}")
            self.tail = 2.0 * _band_envelope_sum(last, T_max + 1, np.inf)
            if not self.tail < tail_tol:
                raise CertificateError(
                    f"band {len(bands) - 1}: certified tail {self.tail:.3e} >= {tail_tol:.1e} at "
                    f"T_max = {T_max}; need T_max >= {certified_horizon(last, bands[-1][0], tail_tol)}")
        self.T_max = T_max
        # counts of times per band within [1, T_max]
        self.lengths = []
        self.env = 0.0
        for (a, b), cert in zip(bands, self.certs):
            hi = min(b, T_max)
            self.lengths.append(max(0.0, hi - a + 1) if np.isfinite(hi) else np.inf)
            self.env += 2.0 * _band_envelope_sum(cert, a, hi)

        Q = op.dense() - op.pi[None, :]
        if np.isinf(T_max):
            self.cumulative = regularized_inverse(op) - np.eye(op.n)
        else:
            # (P - 1 pi)^t = P^t - 1 pi for t >= 1 and the row difference kills 1 pi
            self.cumulative = _sum_of_powers(Q, T_max)

    def pair(self, i: int, j: int) -> Sandwich:
        lhs = float(np.abs(self.cumulative[i] - self.cumulative[j]).sum())
        head = np.zeros(self.op.n)
        for L, cert in zip(self.lengths, self.certs):
            if cert.partition.same_block(i, j) or L == 0:
                continue
            if np.isinf(L):  # pragma: no cover - excluded by delta = 0 on the final band
                raise CertificateError("pair separated on an infinite band")
            head += L * (cert.S_inf[i] - cert.S_inf[j])
        h = float(np.abs(head).sum())
        return Sandwich(lhs, h + self.env, h - self.env)


def multitemporal_bounds(op: DiffusionOperator, assign: ScaleAssignment, i: int, j: int,
                         T_max: float = np.inf) -> Sandwich:
    return MultitemporalBounds(op, assign, T_max).pair(i, j)


def optimal_scale_assignment(certs: Sequence[MesoscopicCertificate], t_limit: float = 1e18) -> ScaleAssignment:
    """Band boundaries at the crossings of consecutive envelopes.

    The certificates are taken in the given order (fine to coarse); each
    boundary is the first integer ``t`` where the next envelope is no larger
    than the current one, found by bisection. This minimizes the summed
    envelope when each pair of envelopes crosses once.
    """
    bounds = []
    lo = 2
    for cur, nxt in zip(certs, certs[1:]):
        def better(t):
            return envelope_bound(nxt, t) <= envelope_bound(cur, t)

        if better(lo):
            t = lo
        else:
            hi = lo
            while not better(hi) and hi < t_limit:
                hi *= 2
            a = hi // 2 if hi > lo else lo
            while hi - a > 1:
                mid = (a + hi) // 2
                if better(mid):
                    hi = mid
                else:
                    a = mid
            t = hi
        t = max(t, lo)
        bounds.append(int(t))
        lo = int(t) + 1
    return ScaleAssignment(tuple(bounds), tuple(c.partition for c in certs))
