"""
File formats
============

Readers for tab-separated edge lists and node/label pairs, CSV and TSV writers
for distances, embeddings, eigenvalues, point clouds and curves, and an
``.npz`` cache of eigenpairs keyed by a hash of the graph.

Every writer takes an optional ``header`` mapping that is emitted as
``# key: value`` comment lines before the data.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .graph import GraphError, WeightedGraph, build_graph_from_edges
from .spectral import SpectralBasis


class FormatError(ValueError):
    """A malformed input line; the message names the file and line."""


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def read_edge_list(path) -> WeightedGraph:
    """``node_a<TAB>node_b[<TAB>weight]`` per line; ``#`` lines are comments."""
    edges = []
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) not in (2, 3) or not parts[0] or not parts[1]:
            raise FormatError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields")
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: weight {parts[2]!r} is not a number") from None
            edges.append((parts[0], parts[1], w))
        else:
            edges.append((parts[0], parts[1]))
    try:
        return build_graph_from_edges(edges)
    except GraphError as exc:
        raise GraphError(f"{path}: {exc}") from None


def write_edge_list(path, g: WeightedGraph, header: Mapping | None = None) -> None:
    i, j, w = g.edges(include_self_loops=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _header(fh, header)
        for a, b, x in zip(i, j, w):
            fh.write(f"{g.node_ids[a]}\t{g.node_ids[b]}\t{_fmt(x)}\n")


def read_labels(path) -> list[tuple[str, str]]:
    """``node_id<TAB>label_id`` pairs."""
    out = []
    for lineno, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise FormatError(f"{path}:{lineno}: expected node_id<TAB>label_id")
        out.append((parts[0], parts[1]))
    return out


def write_labels(path, pairs: Iterable[tuple[str, str]], header: Mapping | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _header(fh, header)
        for v, lab in pairs:
            fh.write(f"{v}\t{lab}\n")


def _header(fh, header: Mapping | None) -> None:
    for k, v in (header or {}).items():
        text = json.dumps(v, sort_keys=True) if isinstance(v, (dict, list, tuple)) else str(v)
        fh.write(f"# {k}: {text}\n")


def _fmt(x: float) -> str:
    # shortest round-trip repr keeps files byte-identical across runs
    return repr(float(x))


def write_table(path, columns: Mapping[str, Iterable], header: Mapping | None = None, delimiter: str = ",") -> None:
    """Columns of equal length as a delimited table."""
    names = list(columns)
    cols = [list(columns[c]) for c in names]
    if len({len(c) for c in cols}) > 1:
        raise ValueError("columns differ in length")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _header(fh, header)
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def read_table(path, delimiter: str = ",") -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Header comments, column names and rows as strings."""
    meta: dict[str, str] = {}
    rows = []
    names: list[str] | None = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(":")
                meta[key.strip()] = val.strip()
                continue
            if not line:
                continue
            fields = next(csv.reader([line], delimiter=delimiter))
            if names is None:
                names = fields
            else:
                rows.append(fields)
    return meta, names or [], rows


def write_distance_csv(path, D: np.ndarray, node_ids, header: Mapping | None = None) -> None:
    """Dense matrix with a header row of node ids and the id leading each row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _header(fh, header)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *node_ids])
        for v, row in zip(node_ids, D):
            w.writerow([v, *map(_fmt, row)])


def read_distance_csv(path) -> tuple[list[str], np.ndarray]:
    _, names, rows = read_table(path)
    ids = names[1:]
    D = np.array([[float(x) for x in r[1:]] for r in rows])
    return ids, D


def write_embedding_tsv(path, coords: np.ndarray, node_ids, header: Mapping | None = None) -> None:
    """Node id followed by its coordinates, tab separated."""
    cols = {"node": list(node_ids)}
    for c in range(coords.shape[1]):
        cols[f"y{c + 2}"] = coords[:, c].tolist()
    write_table(path, cols, header, delimiter="\t")


def write_eigenvalues_csv(path, basis: SpectralBasis, header: Mapping | None = None) -> None:
    write_table(path, {"index": list(range(1, basis.M + 1)), "mu": basis.mu.tolist(),
                       "lambda": basis.lam.tolist()}, header)


def write_points_csv(path, points: np.ndarray, labels, header: Mapping | None = None) -> None:
    write_table(path, {"x": points[:, 0].tolist(), "y": points[:, 1].tolist(),
                       "label": [int(x) for x in labels]}, header)


def graph_hash(g: WeightedGraph) -> str:
    """SHA-256 of node ids and the canonical sparse weight matrix."""
    W = g.weights.tocsr().sorted_indices()
    h = hashlib.sha256()
    h.update("\x1f".join(g.node_ids).encode())
    for arr in (W.indptr.astype(np.int64), W.indices.astype(np.int64), W.data.astype(np.float64)):
        h.update(arr.tobytes())
    return h.hexdigest()


def save_basis(cache_dir, g: WeightedGraph, basis: SpectralBasis) -> Path:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{graph_hash(g)}_M{basis.M}.npz"
    np.savez(path, mu=basis.mu, phi=basis.phi, pi=basis.pi)
    return path


def load_basis(cache_dir, g: WeightedGraph, M: int) -> SpectralBasis | None:
    """A cached basis of at least ``M`` pairs for this exact graph, truncated to ``M``."""
    cache_dir = Path(cache_dir)
    if not cache_dir.is_dir():
        return None
    key = graph_hash(g)
    best = None
    for p in cache_dir.glob(f"{key}_M*.npz"):
        m = int(p.stem.rsplit("_M", 1)[1])
        if m >= M and (best is None or m < best[0]):
            best = (m, p)
    if best is None:
        return None
    with np.load(best[1]) as z:
        return SpectralBasis(mu=z["mu"][:M].copy(), phi=z["phi"][:, :M].copy(), pi=z["pi"].copy())
