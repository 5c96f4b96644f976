"""
Link and function prediction on networks
========================================

Link prediction: sample a connected subgraph, hide a fraction of its
non-spanning-tree edges, rank the non-adjacent pairs of the remaining graph by
a distance (ascending) or a neighbourhood score (descending), and score the
ranking against the hidden edges.

Function prediction: k-nearest-neighbour voting under a distance, with votes
weighted by inverse distance, evaluated by k-fold cross-validation; the
baseline lets graph neighbours vote with equal weight.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .graph import WeightedGraph, diffusion_operator, largest_connected_component
from .metrics import DistanceMatrix, DsdEmbedding, pairwise_distances

DIFFUSION_TIMES = (1, 2, 4, 8, 16, 32)
HEURISTICS = ("weighted_common_neighbor", "jaccard", "weighted_adamic_adar")
VOTE_EPS = 1e-12


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


# ---------------------------------------------------------------------------
# link prediction


@dataclass(frozen=True)
class SubgraphSample:
    full: WeightedGraph
    partial: WeightedGraph
    removed: tuple[tuple[int, int], ...]
    shortfall: int


def sample_connected_subgraph(g: WeightedGraph, n_sub: int, removal_frac: float, seed: int) -> SubgraphSample:
    """Induced subgraph on random nodes, with edges hidden outside a random spanning tree.

    The ``n_sub`` sampled nodes induce ``full`` (restricted to its largest
    component). Its ``M`` edges are randomly ordered and a spanning tree is
    grown greedily in that order; ``floor(removal_frac * M)`` of the other
    edges are then removed uniformly at random, so ``partial`` stays connected
    on the same node set. ``removed`` indexes nodes of ``full``; ``shortfall``
    counts requested removals that had no non-tree edge left.
    """
    if not 0 <= removal_frac < 1:
        raise ValueError("removal_frac must lie in [0, 1)")
    if not 1 <= n_sub <= g.n:
        raise ValueError(f"n_sub must lie in [1, {g.n}]")
    rng = _rng(seed)
    nodes = np.sort(rng.choice(g.n, size=n_sub, replace=False))
    full = largest_connected_component(g.subgraph(nodes))
    ii, jj, ww = full.edges()
    M = len(ii)
    order = rng.permutation(M)
    # distinct priorities make the minimum spanning tree the greedy tree for this order
    prio = np.empty(M)
    prio[order] = np.arange(1, M + 1)
    T = csgraph.minimum_spanning_tree(sparse.csr_matrix((prio, (ii, jj)), shape=(full.n, full.n)))
    T = T.tocoo()
    in_tree = np.zeros(M, dtype=bool)
    in_tree[order[(T.data - 1).astype(int)]] = True
    candidates = np.flatnonzero(~in_tree)
    want = int(np.floor(removal_frac * M))
    take = min(want, len(candidates))
    drop = np.sort(rng.choice(candidates, size=take, replace=False)) if take else np.array([], dtype=int)
    W = full.weights.tolil(copy=True)
    for e in drop:
        W[ii[e], jj[e]] = 0.0
        W[jj[e], ii[e]] = 0.0
    partial = WeightedGraph(full.node_ids, W.tocsr())
    removed = tuple((int(ii[e]), int(jj[e])) for e in drop)
    return SubgraphSample(full, partial, removed, want - take)


@dataclass(frozen=True)
class RankedPairList:
    i: np.ndarray
    j: np.ndarray
    score: np.ndarray
    direction: str

    def __len__(self):
        return len(self.i)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.i.tolist(), self.j.tolist()))


def _non_edges(g: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    A = g.adjacency().toarray().astype(bool)
    iu, ju = np.triu_indices(g.n, k=1)
    keep = ~A[iu, ju]
    return iu[keep], ju[keep]


def _ranked(i, j, score, direction) -> RankedPairList:
    key = score if direction == "ascending_distance" else -score
    order = np.lexsort((j, i, key))
    return RankedPairList(i[order], j[order], score[order], direction)


def heuristic_scores(g: WeightedGraph, kind: str) -> RankedPairList:
    """Neighbourhood scores for every non-adjacent pair, highest first.

    ``weighted_common_neighbor``: sum of ``W_ik + W_jk`` over common neighbours.
    ``jaccard``: common over union of neighbourhoods.
    ``weighted_adamic_adar``: sum of ``1 / ln(1 + s_k)`` over common neighbours
    ``k``, with ``s_k`` the weighted degree of ``k``.
    Self-loops never count as neighbours.
    """
    A = g.adjacency()
    Wn = g.weights.copy()
    Wn.setdiag(0)
    Wn.eliminate_zeros()
    i, j = _non_edges(g)
    if kind == "weighted_common_neighbor":
        S = (Wn @ A + A @ Wn).toarray()
        score = S[i, j]
    elif kind == "jaccard":
        CN = (A @ A).toarray()
        deg = np.asarray(A.sum(axis=1)).ravel()
        union = deg[i] + deg[j] - CN[i, j]
        score = np.divide(CN[i, j], union, out=np.zeros(len(i)), where=union > 0)
    elif kind == "weighted_adamic_adar":
        s = np.asarray(Wn.sum(axis=0)).ravel()
        inv = np.divide(1.0, np.log1p(s), out=np.zeros_like(s), where=s > 0)
        S = (A @ sparse.diags(inv) @ A).toarray()
        score = S[i, j]
    else:
        raise ValueError(f"unknown heuristic {kind!r}; choose from {HEURISTICS}")
    return _ranked(i, j, np.asarray(score, dtype=float), "descending_score")


def distance_ranking(dist: DistanceMatrix | np.ndarray, g: WeightedGraph) -> RankedPairList:
    """Non-adjacent pairs by increasing distance; ties in ``(i, j)`` order."""
    D = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist)
    if D.shape != (g.n, g.n):
        raise ValueError("distance matrix does not match the graph")
    i, j = _non_edges(g)
    return _ranked(i, j, D[i, j].astype(float), "ascending_distance")


@dataclass(frozen=True)
class EvalCurves:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    f1: np.ndarray
    auc_partial: float

    @property
    def peak_f1(self) -> float:
        return float(self.f1.max()) if len(self.f1) else 0.0


def evaluate_ranking(ranking: RankedPairList, positives: Iterable[tuple[int, int]], top_n: int | None = None) -> EvalCurves:
    """Confusion counts at every cut-off among the first ``top_n`` ranked pairs.

    Rates are relative to all ranked pairs: ``tpr = recall = TP / |positives|``
    and ``fpr = FP / (len(ranking) - |positives|)``. ``auc_partial`` is the
    trapezoid area under ``(fpr, tpr)`` from the origin to the last cut-off,
    not normalized.
    """
    pos = {(min(a, b), max(a, b)) for a, b in positives}
    if not pos:
        raise ValueError("no positive pairs: recall is undefined")
    keys = ranking.i.astype(np.int64) * (1 << 32) + ranking.j.astype(np.int64)
    pos_keys = np.array([a * (1 << 32) + b for a, b in pos], dtype=np.int64)
    hit = np.isin(keys, pos_keys)
    if hit.sum() != len(pos):
        raise ValueError("some positives are not candidate pairs of the ranking")
    n_neg = len(ranking) - len(pos)
    top_n = len(ranking) if top_n is None else min(int(top_n), len(ranking))
    h = hit[:top_n]
    tp = np.cumsum(h)
    fp = np.cumsum(~h)
    ranks = np.arange(1, top_n + 1)
    precision = tp / ranks
    recall = tp / len(pos)
    fpr = fp / n_neg if n_neg else np.zeros(top_n)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(top_n), where=denom > 0)
    x = np.concatenate([[0.0], fpr])
    y = np.concatenate([[0.0], recall])
    auc = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))
    return EvalCurves(ranks, precision, recall, recall.copy(), fpr, f1, auc)


def linkpred_methods(diffusion_times: Sequence[int] = DIFFUSION_TIMES) -> list[str]:
    return ["dsd", *HEURISTICS, "degree", *[f"diffusion_t{t}" for t in diffusion_times]]


def linkpred_trial(g: WeightedGraph, n_sub: int, removal_frac: float, seed: int,
                   methods: Sequence[str] | None = None, top_n: int | None = None,
                   M: int | None = None) -> dict[str, EvalCurves]:
    """One sampled subgraph scored by every method; DSD uses ``M`` eigenpairs when given."""
    from .metrics import degree_distance, diffusion_distance, dsd_embedding, dsd_exact, dsd_truncated
    from .spectral import eig_full, eig_topk

    methods = linkpred_methods() if methods is None else list(methods)
    sample = sample_connected_subgraph(g, n_sub, removal_frac, seed)
    if not sample.removed:
        raise ValueError("the sample has no removable edges")
    part = sample.partial
    op = diffusion_operator(part)
    basis = None
    out = {}
    for m in methods:
        if m == "dsd":
            if M is None:
                dist = dsd_exact(op)
            else:
                basis = basis if basis is not None else eig_topk(op, min(M, op.n))
                dist = dsd_truncated(dsd_embedding(basis))
            rk = distance_ranking(dist, part)
        elif m in HEURISTICS:
            rk = heuristic_scores(part, m)
        elif m == "degree":
            rk = distance_ranking(degree_distance(part), part)
        elif m.startswith("diffusion_t"):
            full_basis = eig_full(op)
            rk = distance_ranking(diffusion_distance(op, full_basis, int(m[len("diffusion_t"):])), part)
        else:
            raise ValueError(f"unknown method {m!r}")
        out[m] = evaluate_ranking(rk, sample.removed, top_n)
    return out


def aggregate_curves(curves: Sequence[EvalCurves], field_name: str, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of one curve across trials, per rank; NaN past a short trial."""
    stack = np.full((len(curves), length), np.nan)
    for r, c in enumerate(curves):
        v = getattr(c, field_name)[:length]
        stack[r, : len(v)] = v
    with np.errstate(invalid="ignore"):
        counts = np.sum(~np.isnan(stack), axis=0)
        mean = np.where(counts > 0, np.nansum(stack, axis=0) / np.maximum(counts, 1), np.nan)
        dev = np.where(counts > 0, np.sqrt(np.nansum((stack - mean) ** 2, axis=0) / np.maximum(counts, 1)), np.nan)
    return mean, dev


# ---------------------------------------------------------------------------
# function prediction


class LabelTable:
    """Node to label-set map restricted to the nodes of a graph.

    ``unmatched`` lists input node ids missing from the graph; they are kept
    out of the table but never discarded silently.
    """

    def __init__(self, node_labels: Mapping[str, Iterable[str]], unmatched: Sequence[str] = ()):
        self.node_labels = {str(k): frozenset(str(x) for x in v) for k, v in node_labels.items() if v}
        if not self.node_labels:
            raise ValueError("empty label table")
        counts: dict[str, int] = {}
        for labs in self.node_labels.values():
            for lab in labs:
                counts[lab] = counts.get(lab, 0) + 1
        self.counts = dict(sorted(counts.items()))
        self.unmatched = tuple(sorted(set(map(str, unmatched))))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], node_ids: Sequence[str] | None = None) -> "LabelTable":
        known = None if node_ids is None else set(map(str, node_ids))
        table: dict[str, set[str]] = {}
        missing = []
        for node, lab in pairs:
            node = str(node)
            if known is not None and node not in known:
                missing.append(node)
                continue
            table.setdefault(node, set()).add(str(lab))
        return cls(table, missing)

    @classmethod
    def from_partition(cls, node_ids: Sequence[str], labels: Sequence) -> "LabelTable":
        return cls({str(v): {str(lab)} for v, lab in zip(node_ids, labels)})

    def __len__(self):
        return len(self.node_labels)

    def labels_of(self, node_id: str) -> frozenset[str]:
        return self.node_labels.get(str(node_id), frozenset())


def label_filter(labels: LabelTable, min_count: float = 0, max_count: float = np.inf) -> LabelTable:
    """Keep only labels annotating between ``min_count`` and ``max_count`` nodes."""
    if min_count > max_count:
        raise ValueError("min_count exceeds max_count")
    keep = {lab for lab, c in labels.counts.items() if min_count <= c <= max_count}
    table = {v: labs & keep for v, labs in labels.node_labels.items()}
    return LabelTable({v: s for v, s in table.items() if s}, labels.unmatched)


def make_folds(node_ids: Sequence[str], folds: int, seed: int) -> list[np.ndarray]:
    """Random split of the given ids into ``folds`` near-equal groups.

    The ids are sorted first, so the split does not depend on input order.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    ids = np.array(sorted(map(str, node_ids)), dtype=object)
    if len(ids) < folds:
        raise ValueError("fewer labelled nodes than folds")
    perm = _rng(seed).permutation(len(ids))
    return [ids[p] for p in np.array_split(perm, folds)]


def _vote(neigh_labels: list[frozenset[str]], weights: list[float]) -> str | None:
    tally: dict[str, float] = {}
    for labs, w in zip(neigh_labels, weights):
        for lab in sorted(labs):
            tally[lab] = tally.get(lab, 0.0) + w
    if not tally:
        return None
    best = max(tally.values())
    return min(lab for lab, v in tally.items() if v == best)


@dataclass(frozen=True)
class PredictionResult:
    accuracy: float
    fold_accuracy: tuple[float, ...]
    n_correct: int
    n_tested: int


def _cross_validate(node_ids, labels: LabelTable, folds: int, seed: int, neighbours) -> PredictionResult:
    fold_sets = make_folds(list(labels.node_labels), folds, seed)
    correct_total = 0
    tested = 0
    per_fold = []
    for test in fold_sets:
        test_set = set(test)
        c = 0
        for v in test:
            voters, weights = [], []
            for u, w in neighbours(v):
                if u in test_set or u == v:
                    continue
                labs = labels.labels_of(u)
                if labs:
                    voters.append(labs)
                    weights.append(w)
            guess = _vote(voters, weights)
            c += guess is not None and guess in labels.labels_of(v)
        per_fold.append(c / len(test))
        correct_total += c
        tested += len(test)
    return PredictionResult(correct_total / tested, tuple(per_fold), correct_total, tested)


def predict_function(dist: DistanceMatrix | DsdEmbedding | np.ndarray, labels: LabelTable, folds: int = 5,
                     k: int = 10, seed: int = 0, node_ids: Sequence[str] | None = None) -> PredictionResult:
    """Weighted k-nearest-neighbour label voting with cross-validation.

    For each held-out node the ``k`` nearest other nodes (ties by node id)
    are found; those in the training folds vote for each of their labels with
    weight ``1 / max(D, 1e-12)``. The top label (ties to the smallest label
    id) is correct if the node carries it; a node with no votes counts as
    wrong.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if isinstance(dist, DsdEmbedding):
        D = pairwise_distances(dist.coords)
        ids = dist.node_ids if node_ids is None else node_ids
    elif isinstance(dist, DistanceMatrix):
        D = dist.values
        ids = dist.node_ids if node_ids is None else node_ids
    else:
        D = np.asarray(dist, dtype=float)
        ids = node_ids
    if ids is None:
        raise ValueError("node ids are required to match labels")
    ids = [str(v) for v in ids]
    index = {v: r for r, v in enumerate(ids)}
    id_rank = np.argsort(np.argsort(np.array(ids, dtype=object)))

    def neighbours(v):
        r = index[v]
        d = D[r].copy()
        d[r] = np.inf
        order = np.lexsort((id_rank, d))[:k]
        return [(ids[c], 1.0 / max(d[c], VOTE_EPS)) for c in order]

    missing = [v for v in labels.node_labels if v not in index]
    if missing:
        raise ValueError(f"{len(missing)} labelled nodes are absent from the distance matrix")
    return _cross_validate(ids, labels, folds, seed, neighbours)


def majority_vote_baseline(g: WeightedGraph, labels: LabelTable, folds: int = 5, seed: int = 0) -> PredictionResult:
    """Cross-validated vote of direct graph neighbours, one vote each."""
    A = g.adjacency().tocsr()
    ids = list(g.node_ids)

    def neighbours(v):
        r = g.index(v)
        nb = A.indices[A.indptr[r]:A.indptr[r + 1]]
        return [(ids[c], 1.0) for c in nb]

    missing = [v for v in labels.node_labels if v not in g._index]
    if missing:
        raise ValueError(f"{len(missing)} labelled nodes are absent from the graph")
    return _cross_validate(ids, labels, folds, seed, neighbours)
