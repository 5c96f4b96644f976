"""
Weighted graphs and the random-walk diffusion operator
======================================================

A :class:`WeightedGraph` is an undirected graph with nonnegative edge weights
and string node identifiers. :func:`diffusion_operator` row-normalizes the
weight matrix into the Markov matrix ``P = D^-1 W`` together with its
stationary distribution ``pi``, which is proportional to the degrees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist


class GraphError(ValueError):
    """Raised when a graph violates a structural precondition."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with a symmetric, nonnegative sparse weight matrix.

    Parameters
    ----------
    node_ids : sequence of str
        Unique node identifiers; position ``i`` labels row/column ``i``.
    weights : (n, n) sparse matrix
        Symmetric matrix of nonnegative weights. Self-loops are allowed.
    """

    node_ids: tuple[str, ...]
    weights: sparse.csr_matrix
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(str(x) for x in self.node_ids)
        W = sparse.csr_matrix(self.weights, dtype=float)
        W.sum_duplicates()
        W.eliminate_zeros()
        n = len(ids)
        if W.shape != (n, n):
            raise GraphError(f"weight matrix has shape {W.shape}, expected ({n}, {n})")
        if len(set(ids)) != n:
            raise GraphError("node identifiers must be unique")
        if W.nnz and W.data.min() < 0:
            raise GraphError("weights must be nonnegative")
        if n and abs(W - W.T).max() > 0:
            raise GraphError("weight matrix must be symmetric")
        object.__setattr__(self, "node_ids", ids)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(ids)})

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    def index(self, node_id) -> int:
        return self._index[str(node_id)]

    def edges(self, include_self_loops: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Upper-triangular edge list ``(i, j, w)`` with ``i < j`` (or ``i <= j``)."""
        U = sparse.triu(self.weights, k=0 if include_self_loops else 1).tocoo()
        order = np.lexsort((U.col, U.row))
        return U.row[order], U.col[order], U.data[order]

    @property
    def num_edges(self) -> int:
        return len(self.edges()[0])

    def adjacency(self) -> sparse.csr_matrix:
        """Binary adjacency without self-loops."""
        A = self.weights.copy()
        A.setdiag(0)
        A.eliminate_zeros()
        A.data[:] = 1.0
        return A

    def subgraph(self, nodes: Sequence[int]) -> "WeightedGraph":
        nodes = np.asarray(nodes, dtype=int)
        W = self.weights[nodes][:, nodes]
        return WeightedGraph(tuple(self.node_ids[i] for i in nodes), W)

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        ncomp, _ = csgraph.connected_components(self.weights, directed=False)
        return ncomp == 1

    def same_as(self, other: "WeightedGraph", atol: float = 0.0) -> bool:
        """Equality up to node ordering."""
        if set(self.node_ids) != set(other.node_ids):
            return False
        perm = [other.index(v) for v in self.node_ids]
        W2 = other.weights[perm][:, perm]
        diff = self.weights - W2
        return diff.nnz == 0 or abs(diff).max() <= atol


@dataclass(frozen=True)
class DiffusionOperator:
    """Row-stochastic ``P = D^-1 W`` with degrees and stationary distribution."""

    graph: WeightedGraph
    P: sparse.csr_matrix
    degrees: np.ndarray
    pi: np.ndarray

    @property
    def n(self) -> int:
        return self.graph.n

    def dense(self) -> np.ndarray:
        return self.P.toarray()


def build_graph_from_edges(edges: Iterable[tuple]) -> WeightedGraph:
    """Build a graph from ``(a, b)`` or ``(a, b, weight)`` tuples.

    Nodes are indexed in order of first appearance. Repeated edges, in either
    orientation, are merged by taking the maximum weight.
    """
    ids: dict[str, int] = {}
    merged: dict[tuple[int, int], float] = {}
    for e in edges:
        if len(e) == 2:
            a, b = e
            w = 1.0
        else:
            a, b, w = e
        w = float(w)
        if not np.isfinite(w) or w < 0:
            raise GraphError(f"invalid weight on edge {(a, b, w)}")
        ia = ids.setdefault(str(a), len(ids))
        ib = ids.setdefault(str(b), len(ids))
        key = (min(ia, ib), max(ia, ib))
        merged[key] = max(merged.get(key, 0.0), w)
    if not ids:
        raise GraphError("empty edge list")
    n = len(ids)
    if merged:
        keys = np.array(list(merged.keys()), dtype=int)
        vals = np.array(list(merged.values()))
        rows = np.concatenate([keys[:, 0], keys[:, 1]])
        cols = np.concatenate([keys[:, 1], keys[:, 0]])
        data = np.concatenate([vals, vals])
        loops = keys[:, 0] == keys[:, 1]
        if loops.any():
            # each self-edge was doubled above
            keep = np.concatenate([np.ones(len(keys), bool), ~loops])
            rows, cols, data = rows[keep], cols[keep], data[keep]
        W = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    else:
        W = sparse.csr_matrix((n, n))
    return WeightedGraph(tuple(ids), W)


def build_graph_from_kernel(points, sigma: float, node_ids: Sequence[str] | None = None) -> WeightedGraph:
    """Gaussian-kernel graph ``W_ij = exp(-||x_i - x_j||^2 / sigma^2)``.

    The diagonal equals one (zero distance). Kernel values that underflow to
    zero are simply absent from the sparse matrix.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise GraphError("points must be a 2-D array of equal-length vectors")
    if not sigma > 0:
        raise GraphError("sigma must be positive")
    n = X.shape[0]
    if n < 2:
        raise GraphError("a kernel graph needs at least two points")
    W = np.exp(-cdist(X, X, "sqeuclidean") / sigma**2)
    if node_ids is None:
        node_ids = tuple(str(i) for i in range(n))
    return WeightedGraph(tuple(node_ids), sparse.csr_matrix(W))


def largest_connected_component(g: WeightedGraph) -> WeightedGraph:
    """Restrict ``g`` to its largest connected component.

    Ties in component size go to the component holding the smallest node index.
    Node order within the component is preserved.
    """
    ncomp, labels = csgraph.connected_components(g.weights, directed=False)
    if ncomp == 1:
        return g
    sizes = np.bincount(labels, minlength=ncomp)
    first_index = {lab: int(np.flatnonzero(labels == lab)[0]) for lab in np.flatnonzero(sizes == sizes.max())}
    best = min(first_index, key=first_index.get)
    return g.subgraph(np.flatnonzero(labels == best))


def diffusion_operator(g: WeightedGraph) -> DiffusionOperator:
    """Random-walk operator ``P = D^-1 W`` of a connected graph."""
    d = g.degrees
    if g.n == 0:
        raise GraphError("empty graph")
    if np.any(d <= 0):
        bad = [g.node_ids[i] for i in np.flatnonzero(d <= 0)[:5]]
        raise GraphError(f"zero-degree nodes: {bad}")
    if not g.is_connected():
        raise GraphError("graph is disconnected; extract the largest connected component first")
    P = sparse.diags(1.0 / d) @ g.weights
    P = sparse.csr_matrix(P)
    pi = d / d.sum()
    return DiffusionOperator(graph=g, P=P, degrees=d.copy(), pi=pi)
