"""Nested multilevel partitions and their file formats."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InputError

TREE_FORMAT = "mhksc-cluster-tree"


def _group(labels: np.ndarray, k: int) -> list[np.ndarray]:
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(k + 1))
    return [order[bounds[c] : bounds[c + 1]] for c in range(k)]


class ClusterTree:
    """Multilevel partition of ``n_nodes`` nodes, finest level first.

    ``assignments[h][v]`` is the cluster of node ``v`` at level ``h`` and
    ``parents[h][c]`` the level ``h + 1`` cluster containing cluster ``c`` of
    level ``h`` (the top level has no parent array). Levels are numbered from
    0 internally; exports number them from 1.
    """

    def __init__(self, n_nodes: int, assignments: list, parents: list,
                 thresholds: Sequence[float]):
        if len(assignments) != len(thresholds):
            raise ValueError("one threshold per level is required")
        if len(parents) != max(len(assignments) - 1, 0):
            raise ValueError("parents must link every level but the top")
        self.n_nodes = int(n_nodes)
        self.assignments = [np.asarray(a, dtype=np.int64) for a in assignments]
        self.parents = [np.asarray(p, dtype=np.int64) for p in parents]
        self.level_thresholds = [float(t) for t in thresholds]

    @classmethod
    def from_groupings(cls, n_nodes: int, ground: list, groupings: list,
                       thresholds: Sequence[float]) -> "ClusterTree":
        """Build from ground clusters (node ids) and, per higher level, groups of
        the previous level's cluster ids."""
        base = np.full(n_nodes, -1, dtype=np.int64)
        for cid, members in enumerate(ground):
            base[np.asarray(members, dtype=np.int64)] = cid
        assignments = [base]
        parents = []
        k_prev = len(ground)
        for groups in groupings:
            parent = np.full(k_prev, -1, dtype=np.int64)
            for cid, members in enumerate(groups):
                parent[np.asarray(members, dtype=np.int64)] = cid
            parents.append(parent)
            assignments.append(parent[assignments[-1]])
            k_prev = len(groups)
        return cls(n_nodes, assignments, parents, thresholds)

    @property
    def n_levels(self) -> int:
        return len(self.assignments)

    def k(self, level: int) -> int:
        if level == self.n_levels - 1 or self.n_levels == 0:
            a = self.assignments[level]
            return int(a.max()) + 1 if len(a) else 0
        return len(self.parents[level])

    def cluster_counts(self) -> list[int]:
        return [self.k(h) for h in range(self.n_levels)]

    def clusters(self, level: int) -> list[np.ndarray]:
        """Sorted member node ids of each cluster at ``level``."""
        return _group(self.assignments[level], self.k(level))

    def children(self, level: int) -> list[np.ndarray]:
        """Child cluster ids (at ``level - 1``) of each cluster at ``level``."""
        if level < 1:
            raise ValueError("ground level clusters have no child clusters")
        return _group(self.parents[level - 1], self.k(level))

    def validate(self) -> None:
        """Raise ``AssertionError`` unless every level partitions all nodes and
        nests into the next one."""
        for h, a in enumerate(self.assignments):
            assert len(a) == self.n_nodes, f"level {h} does not cover all nodes"
            assert a.min(initial=0) >= 0, f"level {h} has unassigned nodes"
            k = self.k(h)
            used = np.unique(a)
            assert np.array_equal(used, np.arange(k)), f"level {h} has empty or gapped ids"
        for h, p in enumerate(self.parents):
            assert len(p) == self.k(h)
            assert np.all(p >= 0)
            assert np.array_equal(p[self.assignments[h]], self.assignments[h + 1])
        counts = self.cluster_counts()
        assert all(a >= b for a, b in zip(counts, counts[1:])), "cluster counts increase"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterTree):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and self.level_thresholds == other.level_thresholds
            and len(self.assignments) == len(other.assignments)
            and all(np.array_equal(a, b) for a, b in zip(self.assignments, other.assignments))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"ClusterTree(n_nodes={self.n_nodes}, k={self.cluster_counts()})"


def tree_to_dict(tree: ClusterTree, node_labels: Sequence | None = None,
                 all_thresholds: Sequence[float] | None = None) -> dict:
    labels = list(range(tree.n_nodes)) if node_labels is None else [str(x) for x in node_labels]
    levels = []
    for h in range(tree.n_levels):
        if h == 0:
            clusters = [
                {"id": c, "members": m.tolist()} for c, m in enumerate(tree.clusters(0))
            ]
        else:
            clusters = [
                {"id": c, "children": ch.tolist()} for c, ch in enumerate(tree.children(h))
            ]
        levels.append({
            "level": h + 1,
            "threshold": tree.level_thresholds[h],
            "k": tree.k(h),
            "clusters": clusters,
        })
    doc = {
        "format": TREE_FORMAT,
        "version": 1,
        "n_nodes": tree.n_nodes,
        "node_labels": labels,
        "level_thresholds": tree.level_thresholds,
        "levels": levels,
        "membership": [a.tolist() for a in tree.assignments],
    }
    if all_thresholds is not None:
        doc["thresholds"] = [float(t) for t in all_thresholds]
    return doc


def write_tree(path, tree: ClusterTree, node_labels=None, all_thresholds=None) -> None:
    doc = tree_to_dict(tree, node_labels, all_thresholds)
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def read_tree(path) -> tuple[ClusterTree, list[str]]:
    """Load a tree export; returns the tree and the node labels."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read tree file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != TREE_FORMAT:
        raise InputError(f"{path} is not a cluster tree export")
    n = int(doc["n_nodes"])
    levels = doc["levels"]
    ground = [c["members"] for c in levels[0]["clusters"]] if levels else []
    groupings = [[c["children"] for c in lvl["clusters"]] for lvl in levels[1:]]
    tree = ClusterTree.from_groupings(n, ground, groupings, [lvl["threshold"] for lvl in levels])
    return tree, [str(x) for x in doc["node_labels"]]


def write_membership_table(path, tree: ClusterTree, node_labels=None) -> None:
    """Flat per-node table: one row per node, one column per level."""
    labels = range(tree.n_nodes) if node_labels is None else node_labels
    header = "node\t" + "\t".join(f"level_{h + 1}" for h in range(tree.n_levels))
    cols = np.column_stack(tree.assignments) if tree.n_levels else np.empty((tree.n_nodes, 0))
    lines = [header]
    for lab, row in zip(labels, cols):
        lines.append(f"{lab}\t" + "\t".join(str(int(c)) for c in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def ordered_membership(tree: ClusterTree, from_level: int = 0) -> np.ndarray:
    """Nodes sorted so that every cluster at every level is a contiguous block.

    Returns an ``N x (1 + levels)`` integer matrix: node index followed by its
    cluster at each level from ``from_level`` upward. Plotting the affinity
    between consecutive rows gives the block-diagonal picture per level.
    """
    if not 0 <= from_level < tree.n_levels:
        raise ConfigError(f"level {from_level + 1} out of range 1..{tree.n_levels}")
    cols = tree.assignments[from_level:]
    keys = [np.arange(tree.n_nodes)] + list(cols)
    order = np.lexsort(keys)
    return np.column_stack([order] + [a[order] for a in cols])


def to_dot(tree: ClusterTree, from_level: int = 0) -> str:
    """Graphviz description with one vertex per cluster and a single root."""
    if not 0 <= from_level < tree.n_levels:
        raise ConfigError(f"level {from_level + 1} out of range 1..{tree.n_levels}")
    lines = ["digraph hierarchy {", "  rankdir=BT;"]
    for h in range(from_level, tree.n_levels):
        sizes = np.bincount(tree.assignments[h], minlength=tree.k(h))
        for c in range(tree.k(h)):
            lines.append(f'  "L{h + 1}C{c}" [label="L{h + 1}:{c} ({sizes[c]})"];')
        if h < tree.n_levels - 1:
            for c, p in enumerate(tree.parents[h]):
                lines.append(f'  "L{h + 1}C{c}" -> "L{h + 2}C{p}";')
    top = tree.n_levels - 1
    if tree.k(top) > 1:
        lines.append(f'  "root" [label="root ({tree.n_nodes})"];')
        for c in range(tree.k(top)):
            lines.append(f'  "L{top + 1}C{c}" -> "root";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_newick(tree: ClusterTree, from_level: int = 0) -> str:
    """Newick string whose leaves are the clusters of ``from_level``."""
    if not 0 <= from_level < tree.n_levels:
        raise ConfigError(f"level {from_level + 1} out of range 1..{tree.n_levels}")

    kids = {h: tree.children(h) for h in range(from_level + 1, tree.n_levels)}

    def render(h: int, c: int) -> str:
        if h == from_level:
            return f"L{h + 1}C{c}"
        inner = ",".join(render(h - 1, int(ch)) for ch in kids[h][c])
        return f"({inner})L{h + 1}C{c}"

    top = tree.n_levels - 1
    parts = [render(top, c) for c in range(tree.k(top))]
    if len(parts) == 1:
        return parts[0] + ";\n"
    return "(" + ",".join(parts) + ")root;\n"
