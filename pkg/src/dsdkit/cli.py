"""
Command-line entry point
========================

``dsdkit <command> [--flags]`` with commands ``graph``, ``synth``, ``dsd``,
``eig``, ``meso``, ``linkpred`` and ``funcpred``. Each writes CSV/TSV files
into ``--out`` whose leading ``#`` comments record the full configuration.

Exit codes: 0 success, 2 bad configuration, 3 computation failure,
4 input/output failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import __version__
from . import io as dio
from .graph import GraphError, diffusion_operator, largest_connected_component
from .mesoscopic import CertificateError, Partition, residual_curve, stochastic_complement
from .metrics import dsd_embedding, dsd_exact, dsd_spectral, dsd_truncated
from .netbio import (
    DIFFUSION_TIMES,
    LabelTable,
    aggregate_curves,
    label_filter,
    linkpred_methods,
    linkpred_trial,
    majority_vote_baseline,
    predict_function,
)
from .spectral import ConvergenceError, eig_full, eig_topk
from . import synth

FORMAT_REVISION = 1
EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _config(args) -> dict:
    skip = {"func", "command"}
    cfg = {"command": args.command, "version": __version__}
    for k, v in sorted(vars(args).items()):
        if k not in skip:
            cfg[k] = str(v) if isinstance(v, Path) else v
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _need_file(path, what):
    if path is None:
        raise ConfigError(f"--{what} is required")
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} file not found: {path}")


def _load_graph(path, lcc: bool = True):
    g = dio.read_edge_list(path)
    return largest_connected_component(g) if lcc else g


# ---------------------------------------------------------------------------
# commands


def cmd_graph(args) -> None:
    _need_file(args.edges, "edges")
    out = _outdir(args)
    g = dio.read_edge_list(args.edges)
    lcc = largest_connected_component(g)
    cfg = _config(args)
    dio.write_table(out / "graph_summary.csv", {
        "nodes": [g.n], "edges": [g.num_edges], "lcc_nodes": [lcc.n], "lcc_edges": [lcc.num_edges],
        "connected": [int(g.is_connected())]}, cfg)
    dio.write_edge_list(out / "lcc_edges.tsv", lcc, cfg)
    print(f"{g.n} nodes, {g.num_edges} edges; largest component {lcc.n} nodes, {lcc.num_edges} edges")


SYNTH_MODELS = ("hsbm", "lowrank", "mixture", "four-gaussians", "ring-bar", "modular", "nested")


def _synth(model: str, seed: int):
    """Graph, list of named partitions and points (or None) for a synthetic model."""
    if model == "hsbm":
        g, p = synth.gen_hsbm(synth.three_block_sbm_spec(seed))
        return g, [("blocks", p), ("trivial", Partition(np.zeros(g.n)))], None
    if model == "lowrank":
        g, p = synth.gen_lowrank_block(synth.three_block_sbm_spec(seed))
        return g, [("blocks", p), ("trivial", Partition(np.zeros(g.n)))], None
    if model == "mixture":
        g, p, pts = synth.three_gaussian_mixture(seed)
        return g, [("clusters", p), ("trivial", Partition(np.zeros(g.n)))], pts
    if model == "four-gaussians":
        g, pts, parts = synth.four_gaussians(seed)
        return g, list(zip(("fine", "middle", "coarse", "trivial"), parts)), pts
    if model == "ring-bar":
        g, fine, coarse, pts = synth.gen_ring_gaussian_bar(seed)
        return g, [("fine", fine), ("coarse", coarse), ("trivial", Partition(np.zeros(g.n)))], pts
    if model == "modular":
        g, p = synth.gen_hsbm(synth.modular_sbm_spec(seed))
        return g, [("blocks", p)], None
    if model == "nested":
        g, p = synth.gen_hsbm(synth.nested_sbm_spec(seed))
        return g, [("blocks", p)], None
    raise ConfigError(f"unknown model {model!r}")


def cmd_synth(args) -> None:
    out = _outdir(args)
    g, parts, pts = _synth(args.model, args.seed)
    cfg = _config(args)
    dio.write_edge_list(out / "edges.tsv", g, cfg)
    for name, p in parts:
        dio.write_labels(out / f"labels_{name}.tsv", zip(g.node_ids, map(str, p.labels)), cfg)
    if pts is not None:
        dio.write_points_csv(out / "points.csv", pts, parts[0][1].labels, cfg)
    print(f"{args.model}: {g.n} nodes, {g.num_edges} edges -> {out}")


def cmd_dsd(args) -> None:
    _need_file(args.edges, "edges")
    if args.mode == "approx" and args.M is None:
        raise ConfigError("--mode approx needs --M")
    if args.mode != "exact" and args.weight_mode != "inverse_pi":
        raise ConfigError("spectral and approximate DSD use --weight-mode inverse_pi")
    out = _outdir(args)
    g = _load_graph(args.edges)
    op = diffusion_operator(g)
    cfg = _config(args)
    timing = {}
    emb = None
    t0 = time.perf_counter()
    if args.mode == "exact":
        D = dsd_exact(op, args.weight_mode)
    elif args.mode == "spectral":
        basis = eig_full(op)
        emb = dsd_embedding(basis, node_ids=g.node_ids)
        D = dsd_spectral(basis, g.node_ids)
    else:
        basis = eig_topk(op, min(args.M, g.n), seed=args.seed)
        emb = dsd_embedding(basis, node_ids=g.node_ids)
        D = dsd_truncated(emb)
    timing[args.mode] = time.perf_counter() - t0
    rows = {"mode": [args.mode], "seconds": [timing[args.mode]]}
    if args.compare_exact and args.mode != "exact":
        t0 = time.perf_counter()
        E = dsd_exact(op)
        te = time.perf_counter() - t0
        rows = {"mode": [args.mode, "exact"], "seconds": [timing[args.mode], te],
                "max_abs_diff_vs_exact": [float(np.abs(D.values - E.values).max()), 0.0]}
        print(f"{args.mode}: {timing[args.mode]:.3f} s, exact: {te:.3f} s, "
              f"ratio {timing[args.mode] / te:.3f}, max |diff| {rows['max_abs_diff_vs_exact'][0]:.3e}")
    dio.write_distance_csv(out / "distances.csv", D.values, g.node_ids, cfg)
    if emb is not None:
        dio.write_embedding_tsv(out / "embedding.tsv", emb.coords, g.node_ids, cfg)
    # wall times vary between runs; kept apart from the reproducible outputs
    dio.write_table(out / "timing.csv", rows, cfg)


def cmd_eig(args) -> None:
    _need_file(args.edges, "edges")
    out = _outdir(args)
    g = _load_graph(args.edges)
    op = diffusion_operator(g)
    M = g.n if args.M is None else min(args.M, g.n)
    basis = dio.load_basis(args.cache, g, M) if args.cache else None
    if basis is None:
        basis = eig_full(op) if M == g.n and g.n <= 5000 else eig_topk(op, M, method=args.method, seed=args.seed)
        if args.cache:
            dio.save_basis(args.cache, g, basis)
    dio.write_eigenvalues_csv(out / "eigenvalues.csv", basis, _config(args))


def _read_partition(path, g) -> Partition:
    pairs = dict(dio.read_labels(path))
    missing = [v for v in g.node_ids if v not in pairs]
    if missing:
        raise ConfigError(f"{path}: {len(missing)} nodes have no block, e.g. {missing[:3]}")
    return Partition([pairs[v] for v in g.node_ids])


def cmd_meso(args) -> None:
    if (args.edges is None) == (args.synth is None):
        raise ConfigError("give exactly one of --edges and --synth")
    if args.edges is not None:
        _need_file(args.edges, "edges")
        if not args.partition:
            raise ConfigError("--edges needs at least one --partition file")
        for p in args.partition:
            _need_file(p, "partition")
    out = _outdir(args)
    if args.edges is not None:
        g = _load_graph(args.edges)
        parts = [(Path(p).stem, _read_partition(p, g)) for p in args.partition]
    else:
        g, parts, _ = _synth(args.synth, args.seed)
        if args.partition:
            parts = [(Path(p).stem, _read_partition(p, g)) for p in args.partition]
    op = diffusion_operator(g)
    cols = {"t": list(range(args.t_max + 1))}
    bounds = []
    params = {}
    for name, p in parts:
        cert = stochastic_complement(op, p)
        t, measured, bound = residual_curve(op, cert, args.t_max)
        cols[f"measured_{name}"] = measured.tolist()
        cols[f"bound_{name}"] = bound.tolist()
        bounds.append(bound)
        params[name] = {"K": p.K, "delta": cert.delta, "kappa": cert.kappa, "lambda_star": cert.lambda_star}
        for note in cert.warnings:
            print(f"warning [{name}]: {note}", file=sys.stderr)
    cols["min_envelope"] = np.min(bounds, axis=0).tolist()
    cfg = _config(args)
    cfg["certificates"] = params
    dio.write_table(out / "residual_curve.csv", cols, cfg)
    for name, prm in params.items():
        print(f"{name}: K={prm['K']} delta={prm['delta']:.3e} kappa={prm['kappa']:.3f} "
              f"lambda*={prm['lambda_star']:.12f}")


def _trial(job):
    g, n_sub, frac, seed, methods, top_n, M = job
    return linkpred_trial(g, n_sub, frac, seed, methods, top_n, M)


def cmd_linkpred(args) -> None:
    _need_file(args.edges, "edges")
    methods = args.methods or linkpred_methods()
    known = set(linkpred_methods(DIFFUSION_TIMES))
    bad = [m for m in methods if m not in known and not m.startswith("diffusion_t")]
    if bad:
        raise ConfigError(f"unknown methods {bad}")
    if args.trials < 1:
        raise ConfigError("--trials must be positive")
    out = _outdir(args)
    g = _load_graph(args.edges)
    if args.nodes > g.n:
        raise ConfigError(f"--nodes {args.nodes} exceeds the {g.n} nodes of the graph")
    # trial r owns the stream seeded with seed + r, whatever the worker count
    jobs = [(g, args.nodes, args.removal_frac, args.seed + r, methods, args.top_n, args.M)
            for r in range(args.trials)]
    workers = max(1, args.threads or os.cpu_count() or 1)
    if workers == 1 or args.trials == 1:
        results = [_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_trial, jobs))
    length = max(len(r[methods[0]].thresholds) for r in results)
    curves = {"method": [], "rank": []}
    fields = ("precision", "recall", "tpr", "fpr", "f1")
    for f in fields:
        curves[f"{f}_mean"] = []
        curves[f"{f}_std"] = []
    summary = {"method": [], "partial_auc_mean": [], "partial_auc_std": [], "peak_f1_mean": [], "peak_f1_std": []}
    for m in methods:
        per = [r[m] for r in results]
        curves["method"] += [m] * length
        curves["rank"] += list(range(1, length + 1))
        for f in fields:
            mean, dev = aggregate_curves(per, f, length)
            curves[f"{f}_mean"] += mean.tolist()
            curves[f"{f}_std"] += dev.tolist()
        auc = np.array([c.auc_partial for c in per])
        f1 = np.array([c.peak_f1 for c in per])
        summary["method"].append(m)
        summary["partial_auc_mean"].append(float(auc.mean()))
        summary["partial_auc_std"].append(float(auc.std()))
        summary["peak_f1_mean"].append(float(f1.mean()))
        summary["peak_f1_std"].append(float(f1.std()))
    cfg = _config(args)
    cfg["note"] = "partial AUC: unnormalized trapezoid area over the realized FPR range of the top-n window"
    cfg.pop("threads", None)
    dio.write_table(out / "linkpred_curves.csv", curves, cfg)
    dio.write_table(out / "linkpred_summary.csv", summary, cfg)
    for m, a, f in zip(summary["method"], summary["partial_auc_mean"], summary["peak_f1_mean"]):
        print(f"{m:28s} partial AUC {a:.4f}  peak F1 {f:.4f}")


def cmd_funcpred(args) -> None:
    _need_file(args.edges, "edges")
    _need_file(args.labels, "labels")
    out = _outdir(args)
    g = _load_graph(args.edges)
    table = LabelTable.from_pairs(dio.read_labels(args.labels), g.node_ids)
    if table.unmatched:
        print(f"warning: {len(table.unmatched)} labelled ids are not in the graph, e.g. "
              f"{list(table.unmatched[:3])}", file=sys.stderr)
    table = label_filter(table, args.min_count, args.max_count)
    op = diffusion_operator(g)
    rows = {"method": [], "M": [], "accuracy": []}
    if args.mode == "exact":
        res = predict_function(dsd_exact(op), table, args.folds, args.k, args.seed)
        rows["method"].append("dsd_exact")
        rows["M"].append(g.n)
        rows["accuracy"].append(res.accuracy)
    else:
        grid = sorted({min(m, g.n) for m in (args.M_grid or [g.n])})
        top = max(grid)
        basis = eig_full(op) if top == g.n else eig_topk(op, top, seed=args.seed)
        for M in grid:
            emb = dsd_embedding(basis, M, node_ids=g.node_ids)
            res = predict_function(emb, table, args.folds, args.k, args.seed)
            rows["method"].append("dsd_knn")
            rows["M"].append(M)
            rows["accuracy"].append(res.accuracy)
    base = majority_vote_baseline(g, table, args.folds, args.seed)
    rows["method"].append("majority_vote")
    rows["M"].append(0)
    rows["accuracy"].append(base.accuracy)
    cfg = _config(args)
    cfg["labelled_nodes"] = len(table)
    cfg["unmatched_label_ids"] = len(table.unmatched)
    dio.write_table(out / "funcpred_accuracy.csv", rows, cfg)
    for m, M, a in zip(rows["method"], rows["M"], rows["accuracy"]):
        print(f"{m:14s} M={M:<6d} accuracy {a:.4f}")


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsdkit", description="Diffusion state distances on weighted graphs.",
                                 allow_abbrev=False)
    ap.add_argument("--version", action="version",
                    version=f"dsdkit {__version__} (output format {FORMAT_REVISION})")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("graph", help="summarize an edge list and extract its largest component",
                       allow_abbrev=False)
    p.add_argument("--edges", required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("synth", help="generate a synthetic graph", allow_abbrev=False)
    p.add_argument("--model", choices=SYNTH_MODELS, required=True)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dsd", help="pairwise DSD", allow_abbrev=False)
    p.add_argument("--edges", required=True)
    p.add_argument("--mode", choices=("exact", "spectral", "approx"), default="exact")
    p.add_argument("--M", type=int, help="eigenpairs kept by --mode approx")
    p.add_argument("--weight-mode", choices=("inverse_pi", "one"), default="inverse_pi")
    p.add_argument("--compare-exact", action="store_true", help="also time exact DSD and report the difference")
    common(p)
    p.set_defaults(func=cmd_dsd)

    p = sub.add_parser("eig", help="smallest eigenvalues of the normalized Laplacian", allow_abbrev=False)
    p.add_argument("--edges", required=True)
    p.add_argument("--M", type=int)
    p.add_argument("--method", choices=("auto", "arpack", "lanczos", "dense"), default="auto")
    p.add_argument("--cache", help="directory for cached eigenpairs")
    common(p)
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("meso", help="residual curves ||P^t - S_inf|| and envelopes", allow_abbrev=False)
    p.add_argument("--edges")
    p.add_argument("--synth", choices=SYNTH_MODELS)
    p.add_argument("--partition", action="append", help="node<TAB>block file; repeatable")
    p.add_argument("--t-max", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_meso)

    p = sub.add_parser("linkpred", help="link-prediction trials on sampled subgraphs", allow_abbrev=False)
    p.add_argument("--edges", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--nodes", type=int, default=400)
    p.add_argument("--removal-frac", type=float, default=0.10)
    p.add_argument("--methods", nargs="+")
    p.add_argument("--top-n", type=int, default=20000)
    p.add_argument("--M", type=int, help="eigenpairs for DSD (default: exact DSD)")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    common(p)
    p.set_defaults(func=cmd_linkpred)

    p = sub.add_parser("funcpred", help="cross-validated function prediction", allow_abbrev=False)
    p.add_argument("--edges", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--mode", choices=("exact", "spectral"), default="spectral")
    p.add_argument("--M-grid", type=int, nargs="+")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--min-count", type=float, default=0)
    p.add_argument("--max-count", type=float, default=np.inf)
    common(p)
    p.set_defaults(func=cmd_funcpred)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"dsdkit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, dio.FormatError) as exc:
        print(f"dsdkit: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GraphError, ConvergenceError, CertificateError, sla.LinAlgError, np.linalg.LinAlgError,
            ValueError, RuntimeError) as exc:
        print(f"dsdkit: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
