"""Partition quality: modularity, conductance, adjusted Rand index and
normalized variation of information.

A partition is any integer label array indexed by node; labels need not be
contiguous.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .graph import Graph


class Partition:
    """Node-to-cluster assignment with dense cluster ids ``0..k-1``."""

    __slots__ = ("assignment", "k")

    def __init__(self, labels):
        labels = np.asarray(labels)
        if labels.ndim != 1:
            raise ConfigError("partition labels must be one-dimensional")
        _, dense = np.unique(labels, return_inverse=True)
        self.assignment = dense.astype(np.int64).reshape(-1)
        self.k = int(dense.max()) + 1 if len(dense) else 0

    @classmethod
    def from_clusters(cls, clusters, n: int) -> "Partition":
        labels = np.full(n, -1, dtype=np.int64)
        for c, members in enumerate(clusters):
            labels[np.asarray(members, dtype=np.int64)] = c
        if np.any(labels < 0):
            raise ConfigError("clusters do not cover every node")
        return cls(labels)

    def __len__(self) -> int:
        return len(self.assignment)


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(p)


def _cluster_stats(g: Graph, p: Partition):
    if g.n_edges == 0:
        raise ConfigError("metric undefined on a graph without edges")
    if len(p) != g.n_nodes:
        raise ConfigError(f"partition has {len(p)} nodes, graph has {g.n_nodes}")
    a = p.assignment
    edges = g.edges()
    same = a[edges[:, 0]] == a[edges[:, 1]]
    intra = np.bincount(a[edges[same, 0]], minlength=p.k).astype(np.float64)
    vol = np.bincount(a, weights=g.degrees().astype(np.float64), minlength=p.k)
    return intra, vol, float(g.n_edges)


def modularity(g: Graph, p) -> float:
    """Newman-Girvan modularity ``sum_c e_c/m - (d_c/2m)^2``."""
    p = _as_partition(p)
    intra, vol, m = _cluster_stats(g, p)
    return float(np.sum(intra / m - (vol / (2.0 * m)) ** 2))


def modularity_terms(g: Graph, p) -> np.ndarray:
    """Per-cluster modularity contributions; they sum to :func:`modularity`.

    Computed one cluster at a time from its member list, independently of the
    single-pass edge scan.
    """
    p = _as_partition(p)
    if g.n_edges == 0:
        raise ConfigError("metric undefined on a graph without edges")
    if len(p) != g.n_nodes:
        raise ConfigError(f"partition has {len(p)} nodes, graph has {g.n_nodes}")
    m = float(g.n_edges)
    a = g.to_csr()
    deg = g.degrees().astype(np.float64)
    out = np.empty(p.k)
    order = np.argsort(p.assignment, kind="stable")
    bounds = np.searchsorted(p.assignment[order], np.arange(p.k + 1))
    for c in range(p.k):
        members = order[bounds[c] : bounds[c + 1]]
        e_c = a[members][:, members].sum() / 2.0
        out[c] = e_c / m - (deg[members].sum() / (2.0 * m)) ** 2
    return out


def cut_conductance(g: Graph, p) -> float:
    """Mean over clusters of ``cut(c) / min(vol(c), vol(V) - vol(c))``.

    A cluster whose denominator is zero contributes 0.
    """
    p = _as_partition(p)
    intra, vol, m = _cluster_stats(g, p)
    cut = vol - 2.0 * intra
    denom = np.minimum(vol, 2.0 * m - vol)
    phi = np.zeros(p.k)
    ok = denom > 0
    phi[ok] = cut[ok] / denom[ok]
    return float(phi.mean())


def contingency(p1, p2) -> sp.coo_matrix:
    p1 = _as_partition(p1)
    p2 = _as_partition(p2)
    if len(p1) != len(p2):
        raise ConfigError(f"partitions cover {len(p1)} and {len(p2)} nodes")
    ones = np.ones(len(p1), dtype=np.int64)
    table = sp.coo_matrix((ones, (p1.assignment, p2.assignment)), shape=(p1.k, p2.k))
    table.sum_duplicates()
    return table


def _pairs(counts) -> int:
    return sum(int(c) * (int(c) - 1) // 2 for c in counts)


def ari(p1, p2) -> float:
    """Hubert-Arabie adjusted Rand index from exact integer pair counts.

    Both partitions trivial in the same way (all singletons, or one cluster)
    gives 0/0; that case returns 1.0.
    """
    table = contingency(p1, p2)
    n = int(table.data.sum())
    index = _pairs(table.data)
    a = _pairs(np.asarray(table.sum(axis=1)).ravel())
    b = _pairs(np.asarray(table.sum(axis=0)).ravel())
    total = n * (n - 1) // 2
    expected = Fraction(a * b, total) if total else Fraction(0)
    den = Fraction(a + b, 2) - expected
    if den == 0:
        return 1.0
    return float((index - expected) / den)


def _entropy(counts: np.ndarray, n: int) -> float:
    q = counts[counts > 0] / n
    return float(-np.sum(q * np.log(q)))


def entropy(p) -> float:
    p = _as_partition(p)
    return _entropy(np.bincount(p.assignment).astype(np.float64), len(p))


def mutual_information(p1, p2) -> float:
    table = contingency(p1, p2)
    n = float(table.data.sum())
    r = np.asarray(table.sum(axis=1)).ravel().astype(np.float64)
    c = np.asarray(table.sum(axis=0)).ravel().astype(np.float64)
    nij = table.data.astype(np.float64)
    mi = np.sum(nij / n * np.log(nij * n / (r[table.row] * c[table.col])))
    return float(max(mi, 0.0))


def vi(p1, p2, normalized: bool = True) -> float:
    """Variation of information ``H1 + H2 - 2 I``, divided by ``log N`` by default."""
    p1 = _as_partition(p1)
    p2 = _as_partition(p2)
    if len(p1) != len(p2):
        raise ConfigError(f"partitions cover {len(p1)} and {len(p2)} nodes")
    n = len(p1)
    raw = entropy(p1) + entropy(p2) - 2.0 * mutual_information(p1, p2)
    raw = max(raw, 0.0)
    if not normalized:
        return raw
    if n < 2:
        raise ConfigError("normalized VI needs at least 2 nodes")
    return raw / math.log(n)
