"""Immutable sparse undirected graph, edge-list I/O and topology statistics."""

from __future__ import annotations

from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InputError


class Graph:
    """Unweighted undirected graph in CSR form with dense 0-based node indices.

    Neighbor lists are sorted, symmetric and free of self-loops and duplicates.
    ``node_labels[i]`` is the original identifier of node ``i`` (string tokens
    when loaded from a file, plain integers otherwise).
    """

    __slots__ = ("_indptr", "_indices", "node_labels", "_label_index", "_csr")

    def __init__(self, indptr, indices, node_labels: Sequence[Hashable] | None = None):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        n = len(indptr) - 1
        if node_labels is None:
            node_labels = list(range(n))
        if len(node_labels) != n:
            raise ValueError("node_labels length does not match node count")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self._indptr = indptr
        self._indices = indices
        self.node_labels = tuple(node_labels)
        self._label_index = None
        self._csr = None

    @classmethod
    def from_edges(cls, n_nodes: int, edges, node_labels=None) -> "Graph":
        """Build a graph from an iterable or ``(m, 2)`` array of index pairs.

        Edges are symmetrized; self-loops and duplicates are dropped.
        """
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n_nodes):
            raise ValueError("edge endpoint out of range")
        e = e[e[:, 0] != e[:, 1]]
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        mat = sp.csr_matrix(
            (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n_nodes, n_nodes)
        )
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.indptr, mat.indices, node_labels)

    @property
    def n_nodes(self) -> int:
        return len(self._indptr) - 1

    @property
    def n_edges(self) -> int:
        return len(self._indices) // 2

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def neighbors(self, i: int) -> np.ndarray:
        return self._indices[self._indptr[i] : self._indptr[i + 1]]

    def index_of(self, label) -> int:
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.node_labels)}
        return self._label_index[label]

    def label_index(self) -> dict:
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.node_labels)}
        return self._label_index

    def to_csr(self) -> sp.csr_matrix:
        """Binary adjacency matrix (float64). Cached; do not mutate."""
        if self._csr is None:
            n = self.n_nodes
            data = np.ones(len(self._indices), dtype=np.float64)
            self._csr = sp.csr_matrix((data, self._indices, self._indptr), shape=(n, n))
        return self._csr

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges with ``u < v``, sorted lexicographically."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees())
        keep = rows < self._indices
        return np.column_stack([rows[keep], self._indices[keep]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            np.array_equal(self._indptr, other._indptr)
            and np.array_equal(self._indices, other._indices)
            and self.node_labels == other.node_labels
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def adjacency_column(g: Graph, i: int) -> np.ndarray:
    """Sorted neighbor indices of node ``i``: the sparse form of ``A[:, i]``."""
    if not 0 <= i < g.n_nodes:
        raise IndexError(f"node index {i} out of range for graph with {g.n_nodes} nodes")
    return g.neighbors(i)


def _tokenize(path: Path):
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            yield lineno, s.split()


def load_edge_list(path, directed_input: bool = False) -> Graph:
    """Read a whitespace-separated edge list into a :class:`Graph`.

    Lines starting with ``#`` are comments. Node tokens are arbitrary strings
    and receive dense indices in order of first appearance. Directed inputs are
    symmetrized; ``directed_input`` only documents that intent, the result is
    the same undirected graph either way.
    """
    del directed_input
    path = Path(path)
    index: dict[str, int] = {}
    labels: list[str] = []
    src: list[int] = []
    dst: list[int] = []
    for lineno, tokens in _tokenize(path):
        if len(tokens) < 2:
            raise InputError(f"{path}:{lineno}: expected two node tokens, got {len(tokens)}")
        ids = []
        for tok in tokens[:2]:
            k = index.get(tok)
            if k is None:
                k = index[tok] = len(labels)
                labels.append(tok)
            ids.append(k)
        src.append(ids[0])
        dst.append(ids[1])
    if not labels:
        raise InputError(f"{path}: graph is empty")
    edges = np.column_stack([np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)])
    return Graph.from_edges(len(labels), edges, labels)


def write_edge_list(g: Graph, path) -> None:
    """Write ``g`` so that :func:`load_edge_list` reproduces it exactly.

    Each node first appears in index order. A node without a lower-indexed
    neighbor is declared by a self-loop line, which the loader drops while
    keeping the node.
    """
    labels = [str(lab) for lab in g.node_labels]
    lines = []
    for i in range(g.n_nodes):
        nbrs = g.neighbors(i)
        lower = nbrs[nbrs < i]
        if len(lower) == 0:
            lines.append(f"{labels[i]}\t{labels[i]}\n")
        else:
            lines.extend(f"{labels[i]}\t{labels[j]}\n" for j in lower)
    Path(path).write_text("".join(lines), encoding="utf-8")


def local_clustering(g: Graph) -> np.ndarray:
    """Per-node clustering coefficient; 0 for nodes of degree < 2."""
    a = g.to_csr()
    tri = np.asarray((a.multiply(a @ a)).sum(axis=1)).ravel() / 2.0
    deg = g.degrees().astype(np.float64)
    pairs = deg * (deg - 1) / 2.0
    out = np.zeros(g.n_nodes)
    ok = pairs > 0
    out[ok] = tri[ok] / pairs[ok]
    return out


def global_clustering_coefficient(g: Graph) -> float:
    """Average of local clustering coefficients over all nodes."""
    if g.n_nodes == 0:
        return 0.0
    return float(local_clustering(g).mean())


def load_partition(path, g: Graph | None = None) -> np.ndarray:
    """Read ``node_id cluster_id`` lines into a label array.

    With a graph, node ids are resolved through its label map and every node
    must be assigned exactly once. Without one, node ids must be the integers
    ``0..N-1``. Cluster ids are relabeled densely in first-appearance order.
    """
    path = Path(path)
    pairs = []
    for lineno, tokens in _tokenize(path):
        if len(tokens) < 2:
            raise InputError(f"{path}:{lineno}: expected 'node_id cluster_id'")
        pairs.append((lineno, tokens[0], tokens[1]))
    if g is None:
        lookup = {str(i): i for i in range(len(pairs))}
        n = len(pairs)
    else:
        lookup = {str(lab): i for i, lab in enumerate(g.node_labels)}
        n = g.n_nodes
    labels = np.full(n, -1, dtype=np.int64)
    cluster_ids: dict[str, int] = {}
    for lineno, node, cid in pairs:
        idx = lookup.get(node)
        if idx is None:
            raise InputError(f"{path}:{lineno}: unknown node id {node!r}")
        if labels[idx] != -1:
            raise InputError(f"{path}:{lineno}: node {node!r} assigned twice")
        labels[idx] = cluster_ids.setdefault(cid, len(cluster_ids))
    missing = np.flatnonzero(labels < 0)
    if len(missing):
        raise InputError(f"{path}: {len(missing)} nodes have no cluster assignment")
    return labels


def write_partition(path, labels: Iterable[int], node_labels: Sequence | None = None) -> None:
    labels = list(labels)
    if node_labels is None:
        node_labels = range(len(labels))
    if len(node_labels) != len(labels):
        raise ConfigError("partition length does not match node labels")
    text = "".join(f"{node}\t{c}\n" for node, c in zip(node_labels, labels))
    Path(path).write_text(text, encoding="utf-8")
