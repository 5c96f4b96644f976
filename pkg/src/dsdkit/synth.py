"""
Synthetic graphs and point clouds
=================================

Stochastic block models (random and expected), Gaussian mixtures with a
Gaussian-kernel graph, and a ring / blob / bar cloud with nested ground
truth. Every generator takes a seed and draws from a Philox counter-based
stream, so equal seeds give bit-identical output on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import GraphError, WeightedGraph, build_graph_from_kernel
from .mesoscopic import Partition

MAX_RESAMPLES = 100


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class SbmSpec:
    """Block sizes and the symmetric matrix of edge probabilities."""

    block_sizes: tuple[int, ...]
    prob: np.ndarray
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        prob = np.array(self.prob, dtype=float)
        K = len(sizes)
        if K == 0 or min(sizes) < 1:
            raise ValueError("block sizes must be positive")
        if prob.shape != (K, K):
            raise ValueError(f"prob must be {K}x{K}, got {prob.shape}")
        if not np.allclose(prob, prob.T, rtol=0, atol=0):
            raise ValueError("prob must be symmetric")
        if prob.min() < 0 or prob.max() > 1:
            raise ValueError("probabilities must lie in [0, 1]")
        prob.setflags(write=False)
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "prob", prob)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.block_sizes)), self.block_sizes)

    def expected(self) -> np.ndarray:
        """Entrywise ``p_{k(i) k(j)}``, diagonal included."""
        lab = self.labels()
        return self.prob[np.ix_(lab, lab)]


def _ids(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def gen_hsbm(spec: SbmSpec) -> tuple[WeightedGraph, Partition]:
    """Random block-model graph symmetrized by ``W = max(W~, W~^T)``.

    Every ordered pair ``(i, j)``, including ``i == j``, is an independent
    Bernoulli draw. Disconnected samples are redrawn from the same stream,
    up to 100 times.
    """
    rng = rng_from_seed(spec.seed)
    Pm = spec.expected()
    for _ in range(MAX_RESAMPLES):
        Wt = rng.random(Pm.shape) < Pm
        W = np.maximum(Wt, Wt.T).astype(float)
        g = WeightedGraph(_ids(spec.n), sparse.csr_matrix(W))
        if g.is_connected():
            return g, Partition(spec.labels())
    raise GraphError(f"no connected sample in {MAX_RESAMPLES} attempts; check the probabilities")


def gen_lowrank_block(spec: SbmSpec) -> tuple[WeightedGraph, Partition]:
    """Deterministic ``W_ij = p_{k(i) k(j)}``, the expectation of the random model."""
    W = spec.expected()
    return WeightedGraph(_ids(spec.n), sparse.csr_matrix(W)), Partition(spec.labels())


def gen_gaussian_mixture(means, cov_scale: float, per_cluster: int, sigma: float, seed: int = 0):
    """Isotropic Gaussian clusters joined by a Gaussian-kernel graph.

    Returns
    -------
    graph : WeightedGraph
    partition : Partition
        One block per mean, in the order given.
    points : (n, d) ndarray
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if per_cluster < 1:
        raise ValueError("per_cluster must be at least 1")
    if not cov_scale > 0:
        raise ValueError("cov_scale must be positive")
    if len(means) * per_cluster < 2:
        raise GraphError("a kernel graph needs at least two points")
    rng = rng_from_seed(seed)
    d = means.shape[1]
    pts = np.concatenate([m + np.sqrt(cov_scale) * rng.standard_normal((per_cluster, d)) for m in means])
    labels = np.repeat(np.arange(len(means)), per_cluster)
    return build_graph_from_kernel(pts, sigma), Partition(labels), pts


def gen_ring_gaussian_bar(seed: int = 0, n_ring: int = 200, n_blob: int = 100, n_bar: int = 100,
                          sigma: float = 0.16):
    """Ring, Gaussian blob and bar in the plane.

    The ring has radius 1 about the origin with evenly spaced, jittered
    angles; the blob sits at ``(2.2, 0)`` with covariance ``0.01 I``; the bar
    is uniform on ``[-0.5, 0.5] x [-2.6, -2.4]``.

    Returns
    -------
    graph : WeightedGraph
    fine : Partition
        ring / blob / bar.
    coarse : Partition
        ring and blob together / bar.
    points : (n, 2) ndarray
    """
    rng = rng_from_seed(seed)
    step = 2 * np.pi / n_ring
    ang = np.arange(n_ring) * step + rng.uniform(-0.25 * step, 0.25 * step, n_ring)
    ring = np.column_stack([np.cos(ang), np.sin(ang)])
    blob = np.array([2.2, 0.0]) + 0.1 * rng.standard_normal((n_blob, 2))
    bar = np.column_stack([rng.uniform(-0.5, 0.5, n_bar), rng.uniform(-2.6, -2.4, n_bar)])
    pts = np.concatenate([ring, blob, bar])
    fine = np.repeat([0, 1, 2], [n_ring, n_blob, n_bar])
    coarse = np.repeat([0, 0, 1], [n_ring, n_blob, n_bar])
    return build_graph_from_kernel(pts, sigma), Partition(fine), Partition(coarse), pts


# ---------------------------------------------------------------------------
# reference configurations used by the tests and demos

THREE_BLOCK_PROB = np.array([[0.5, 0.001, 0.001],
                       [0.001, 0.5, 0.01],
                       [0.001, 0.01, 0.5]])

MIXTURE_MEANS = ((0.0, 0.0), (4.0, 0.0), (2.0, 6.0))
FOUR_GAUSSIAN_MEANS = ((0.0, 0.0), (5.0, 0.0), (0.0, 6.5), (0.0, -8.0))


def three_block_sbm_spec(seed: int = 0) -> SbmSpec:
    """Three blocks of 100; 0.5 inside, 0.001 from block 1 out, 0.01 between blocks 2 and 3."""
    return SbmSpec((100, 100, 100), THREE_BLOCK_PROB, seed)


def three_gaussian_mixture(seed: int = 0):
    """Three unit-covariance Gaussians of 100 points, kernel ``exp(-||x - y||^2)``."""
    return gen_gaussian_mixture(MIXTURE_MEANS, 1.0, 100, 1.0, seed)


def four_gaussians(seed: int = 0, per_cluster: int = 100):
    """Four Gaussians of covariance ``I/4`` with nested structure, ``sigma = 1``.

    Returns the graph, the points and the partitions from fine to trivial:
    ``{A}, {B}, {C}, {D}`` / ``{A, B}, {C}, {D}`` / ``{A, B, C}, {D}`` / all.
    """
    g, fine, pts = gen_gaussian_mixture(FOUR_GAUSSIAN_MEANS, 0.25, per_cluster, 1.0, seed)
    lab = fine.labels
    middle = Partition(np.array([0, 0, 1, 2])[lab])
    coarse = Partition(np.array([0, 0, 0, 1])[lab])
    trivial = Partition(np.zeros(g.n, dtype=int))
    return g, pts, [fine, middle, coarse, trivial]


def modular_sbm_spec(seed: int = 0, groups: int = 10, blocks_per_group: int = 5, block_size: int = 40,
                     p_in: float = 0.3, p_group: float = 0.01, p_far: float = 0.0005) -> SbmSpec:
    """Two-level block model: dense blocks, looser groups of blocks, sparse background.

    The default is a 2000-node graph with 50 communities in 10 groups.
    """
    K = groups * blocks_per_group
    group = np.arange(K) // blocks_per_group
    prob = np.where(group[:, None] == group[None, :], p_group, p_far)
    np.fill_diagonal(prob, p_in)
    return SbmSpec((block_size,) * K, prob, seed)


def nested_sbm_spec(seed: int = 0, block_size: int = 50, p_in: float = 0.06, p_sib: float = 0.01,
                    p_far: float = 0.002) -> SbmSpec:
    """Six sparse blocks in three sibling pairs, 300 nodes by default.

    Mean degree is about nine, so a node's direct neighbours are a noisy
    sample of its block while multi-step walks still resolve all six blocks.
    """
    K = 6
    pair = np.arange(K) // 2
    prob = np.where(pair[:, None] == pair[None, :], p_sib, p_far)
    np.fill_diagonal(prob, p_in)
    return SbmSpec((block_size,) * K, prob, seed)
