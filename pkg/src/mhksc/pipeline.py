"""End-to-end driver: benchmark generation, clustering runs, evaluation and export.

Every stage writes plain files into an output directory so later stages read
them back instead of recomputing.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .benchgen import BenchmarkSpec, generate, layout
from .errors import ConfigError, InputError
from .graph import Graph, load_edge_list, load_partition, write_edge_list, write_partition
from .hierarchy import (
    DEFAULT_MAX_CLUSTER, DEFAULT_MAX_GROUND_CLUSTERS, DEFAULT_T0, GROUND_MODES,
    determine_thresholds, mh_ksc,
)
from .ksc import DEFAULT_CAP, fit, project_batch, save_model
from .metrics import Partition, ari, cut_conductance, modularity, vi
from .sampling import SplitSpec, make_split
from .tree import (
    ClusterTree, ordered_membership, read_tree, to_dot, to_newick, write_membership_table,
    write_tree,
)

log = logging.getLogger(__name__)

# Wide enough to resolve a few dozen well separated groups; see README.
DEFAULT_MAXK = 25
EXPORT_FORMATS = {"dot": ("tree.dot", to_dot), "newick": ("tree.nwk", to_newick)}


@dataclass(frozen=True)
class RunConfig:
    input: str
    output: str = "mhksc-out"
    t0: float = DEFAULT_T0
    maxk: int = DEFAULT_MAXK
    train_fraction: float = 0.15
    valid_fraction: float = 0.15
    cap: int = DEFAULT_CAP
    max_cluster: int = DEFAULT_MAX_CLUSTER
    max_clusters: int = DEFAULT_MAX_GROUND_CLUSTERS
    chunk: int = 1000
    seed: int = 0
    threads: int = 1
    ground: str = "base"
    solver: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.t0 < 2.0:
            raise ConfigError(f"t0 must lie in (0, 2), got {self.t0}")
        if self.maxk < 2:
            raise ConfigError(f"maxk must be >= 2, got {self.maxk}")
        for name in ("cap", "max_cluster", "max_clusters", "chunk", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ground not in GROUND_MODES:
            raise ConfigError(f"ground must be one of {GROUND_MODES}, got {self.ground!r}")
        if self.solver not in ("auto", "dense", "lanczos"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        # raises on bad fractions
        self.split_spec()

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_fraction, self.valid_fraction, self.cap, self.seed)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                h.update(block)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return h.hexdigest()


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _write_nodes(path: Path, g: Graph, nodes) -> None:
    path.write_text("".join(f"{g.node_labels[i]}\n" for i in nodes), encoding="utf-8")


def generate_benchmark(out_dir, nodes: int, n_macro: int, n_micro: int, mu1: float = 0.1,
                       mu2: float = 0.2, avg_degree: float = 20.0, seed: int = 0) -> dict:
    """Write ``graph.txt``, ``macro.txt`` and ``micro.txt`` into ``out_dir``."""
    spec = BenchmarkSpec(layout(nodes, n_macro, n_micro), mu1, mu2, avg_degree, seed)
    g, macro, micro = generate(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"graph": out / "graph.txt", "macro": out / "macro.txt", "micro": out / "micro.txt"}
    write_edge_list(g, paths["graph"])
    write_partition(paths["macro"], macro)
    write_partition(paths["micro"], micro)
    log.info("benchmark: %d nodes, %d edges -> %s", g.n_nodes, g.n_edges, out)
    return {k: str(v) for k, v in paths.items()}


def cluster_graph(g: Graph, config: RunConfig, timings: dict | None = None) -> dict:
    """Run the full pipeline in memory.

    Returns a dict with the split, model, latent matrices, threshold set,
    validation tree and the final tree.
    """
    timings = {} if timings is None else timings

    def stage(name, fn, *args, **kw):
        t = time.perf_counter()
        out = fn(*args, **kw)
        timings[name] = round(time.perf_counter() - t, 3)
        return out

    split = stage("split", make_split, g, config.split_spec())
    model, _ = stage("train", fit, g, split.train, config.maxk, config.cap, config.solver)
    p_valid = stage("project_valid", project_batch, model, g, split.valid,
                    config.chunk, config.threads)
    ts, valid_tree = stage("thresholds", determine_thresholds, p_valid, config.t0,
                           config.cap, config.threads)
    p_test = stage("project_all", project_batch, model, g, None, config.chunk, config.threads)
    tree = stage("hierarchy", mh_ksc, p_test, ts, config.max_cluster, config.max_clusters,
                 config.ground)
    tree.validate()
    return {
        "split": split, "model": model, "p_valid": p_valid, "p_test": p_test,
        "thresholds": ts, "valid_tree": valid_tree, "tree": tree,
    }


def run_cluster(config: RunConfig) -> dict:
    """Cluster the graph in ``config.input`` and write all artifacts.

    Returns the manifest, which is also written to ``manifest.json``.
    """
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    timings: dict = {}
    t = time.perf_counter()
    g = load_edge_list(config.input)
    timings["load"] = round(time.perf_counter() - t, 3)
    log.info("loaded %s: %d nodes, %d edges", config.input, g.n_nodes, g.n_edges)

    res = cluster_graph(g, config, timings)
    tree: ClusterTree = res["tree"]
    ts = res["thresholds"]
    labels = [str(x) for x in g.node_labels]

    t = time.perf_counter()
    save_model(res["model"], out / "model.npz")
    np.save(out / "latent_valid.npy", res["p_valid"].rows)
    np.save(out / "latent_all.npy", res["p_test"].rows)
    _write_nodes(out / "train_nodes.txt", g, res["split"].train)
    _write_nodes(out / "valid_nodes.txt", g, res["split"].valid)
    _write_json(out / "thresholds.json", {
        "thresholds": list(ts.thresholds),
        "ground": config.ground,
        "validation_counts": res["valid_tree"].cluster_counts(),
    })
    write_tree(out / "tree.json", tree, labels, ts.thresholds)
    write_tree(out / "validation_tree.json", res["valid_tree"],
               [labels[i] for i in res["split"].valid], ts.thresholds)
    write_membership_table(out / "membership.tsv", tree, labels)
    (out / "tree.dot").write_text(to_dot(tree), encoding="utf-8")
    timings["write"] = round(time.perf_counter() - t, 3)

    manifest = {
        "format": "mhksc-run-manifest",
        "version": 1,
        "package_version": __version__,
        "config": asdict(config),
        "input": {
            "path": str(config.input),
            "sha256": sha256_file(config.input),
            "n_nodes": g.n_nodes,
            "n_edges": g.n_edges,
        },
        "split": {"n_train": len(res["split"].train), "n_valid": len(res["split"].valid)},
        "eigenvalues": res["model"].eigenvalues.tolist(),
        "thresholds": list(ts.thresholds),
        "levels": [
            {"level": h + 1, "threshold": tree.level_thresholds[h], "k": tree.k(h)}
            for h in range(tree.n_levels)
        ],
        "timings": timings,
    }
    _write_json(out / "manifest.json", manifest)
    log.info("levels: %s", tree.cluster_counts())
    return manifest


def _align(tree: ClusterTree, tree_labels, g: Graph) -> np.ndarray:
    """Tree row of every graph node; the node sets must coincide."""
    if tree.n_nodes != g.n_nodes:
        raise InputError(f"tree covers {tree.n_nodes} nodes, graph has {g.n_nodes}")
    pos = {lab: i for i, lab in enumerate(tree_labels)}
    perm = np.empty(g.n_nodes, dtype=np.int64)
    for i, lab in enumerate(g.node_labels):
        j = pos.get(str(lab))
        if j is None:
            raise InputError(f"graph node {lab!r} does not appear in the tree")
        perm[i] = j
    return perm


def evaluate_tree(tree_path, graph_path, truth_paths=()) -> tuple[list[str], list[dict]]:
    """Per-level quality table. Returns ``(truth_names, rows)``."""
    tree, tree_labels = read_tree(tree_path)
    g = load_edge_list(graph_path)
    perm = _align(tree, tree_labels, g)
    truths = {}
    for p in truth_paths:
        name = Path(p).stem
        while name in truths:
            name += "_"
        truths[name] = Partition(load_partition(p, g))
    rows = []
    for h in range(tree.n_levels):
        part = Partition(tree.assignments[h][perm])
        row = {
            "level": h + 1,
            "threshold": tree.level_thresholds[h],
            "k": part.k,
            "Q": modularity(g, part),
            "CC": cut_conductance(g, part),
        }
        for name, truth in truths.items():
            row[f"ARI_{name}"] = ari(part, truth)
            row[f"VI_{name}"] = vi(part, truth)
        rows.append(row)
    return list(truths), rows


def write_report(out_dir, truth_names, rows) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["level", "threshold", "k", "Q", "CC"]
    for name in truth_names:
        cols += [f"ARI_{name}", f"VI_{name}"]
    lines = ["\t".join(cols)]
    for r in rows:
        lines.append("\t".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols))
    paths = {"tsv": out / "evaluation.tsv", "json": out / "evaluation.json"}
    paths["tsv"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_json(paths["json"], {"format": "mhksc-evaluation", "truth": truth_names, "levels": rows})
    return {k: str(v) for k, v in paths.items()}


def export_tree(tree_path, out_dir, fmt: str = "dot", level: int = 1) -> dict:
    """Write the tree description from ``level`` (1-based) up and the
    level-ordered membership matrix."""
    if fmt not in EXPORT_FORMATS:
        raise ConfigError(f"unknown export format {fmt!r}; choose from {sorted(EXPORT_FORMATS)}")
    tree, labels = read_tree(tree_path)
    if not 1 <= level <= tree.n_levels:
        raise ConfigError(f"level {level} out of range 1..{tree.n_levels}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fname, render = EXPORT_FORMATS[fmt]
    paths = {"tree": out / fname, "membership": out / "ordered_membership.tsv"}
    paths["tree"].write_text(render(tree, level - 1), encoding="utf-8")
    mat = ordered_membership(tree, level - 1)
    header = "node\t" + "\t".join(f"level_{h + 1}" for h in range(level - 1, tree.n_levels))
    lines = [header]
    for row in mat:
        lines.append(labels[row[0]] + "\t" + "\t".join(str(int(c)) for c in row[1:]))
    paths["membership"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}
