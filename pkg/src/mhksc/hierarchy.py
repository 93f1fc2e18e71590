"""Threshold discovery on validation projections and the multilevel test hierarchy.

All clustering here works on cosine distances between eigenspace projections.
Distances to or between zero vectors are 1 (treated as orthogonal). Coarser
levels are built on cluster-to-cluster affinities equal to the mean pairwise
distance between the members of two clusters.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ConfigError
from .ksc import LatentMatrix
from .tree import ClusterTree

log = logging.getLogger(__name__)

DEFAULT_T0 = 0.15
DEFAULT_CAP = 10_000
DEFAULT_MAX_CLUSTER = 10_000
DEFAULT_MAX_GROUND_CLUSTERS = 10_000
_ROW_BLOCK = 2048


@dataclass(frozen=True)
class ThresholdSet:
    """Distance thresholds, base threshold first, non-decreasing."""

    thresholds: tuple

    def __post_init__(self):
        t = self.thresholds
        if not t:
            raise ConfigError("threshold set is empty")
        if any(b < a for a, b in zip(t, t[1:])):
            raise ConfigError(f"thresholds must be non-decreasing: {t}")

    def __len__(self) -> int:
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)

    @property
    def test_thresholds(self) -> tuple:
        """Thresholds consumed by the test phase: everything after the base
        threshold, or the base threshold alone when nothing else exists."""
        return self.thresholds[1:] if len(self.thresholds) > 1 else self.thresholds


def cos_dist(e1, e2) -> float:
    """Cosine distance ``1 - cos(e1, e2)`` in ``[0, 2]``; 1 if either vector is zero."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValueError("vectors must have the same length")
    n1 = np.linalg.norm(e1)
    n2 = np.linalg.norm(e2)
    if n1 == 0.0 or n2 == 0.0:
        return 1.0
    return float(min(max(1.0 - (e1 @ e2) / (n1 * n2), 0.0), 2.0))


def unit_rows(x: np.ndarray) -> np.ndarray:
    """Rows scaled to unit norm; zero rows stay zero."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    out = np.zeros_like(x)
    ok = norms > 0
    out[ok] = x[ok] / norms[ok, None]
    return out


def _distance_from_unit(u: np.ndarray, v: np.ndarray, threads: int = 1) -> np.ndarray:
    # 1 - u v^T in row blocks, clipped to [0, 2]
    out = np.empty((len(u), len(v)))
    blocks = [(i, min(i + _ROW_BLOCK, len(u))) for i in range(0, len(u), _ROW_BLOCK)]

    def work(b):
        i, j = b
        blk = out[i:j]
        np.matmul(u[i:j], v.T, out=blk)
        np.subtract(1.0, blk, out=blk)
        np.clip(blk, 0.0, 2.0, out=blk)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, blocks))
    else:
        for b in blocks:
            work(b)
    return out


def _symmetrize_zero_diag(s: np.ndarray) -> np.ndarray:
    # mirror the upper triangle blockwise so no full transpose copy is needed
    n = len(s)
    for i in range(0, n, _ROW_BLOCK):
        j = min(i + _ROW_BLOCK, n)
        blk = s[i:j, i:j]
        blk[...] = np.triu(blk) + np.triu(blk, 1).T
        s[j:, i:j] = s[i:j, j:].T
    np.fill_diagonal(s, 0.0)
    return s


def build_affinity(p, cap: int = DEFAULT_CAP, threads: int = 1) -> np.ndarray:
    """Full pairwise cosine-distance matrix of the rows of ``p``."""
    rows = p.rows if isinstance(p, LatentMatrix) else np.asarray(p, dtype=np.float64)
    if len(rows) > cap:
        raise CapacityError(f"affinity of {len(rows)} rows exceeds cap {cap}")
    u = unit_rows(rows)
    return _symmetrize_zero_diag(_distance_from_unit(u, u, threads))


def greedy_max_order(s: np.ndarray, t: float, inclusive: bool = False):
    """Repeatedly cut out the star of the index with the most neighbors within ``t``.

    Among unassigned indices, the seed is the one with the largest number of
    unassigned ``j`` with ``s[i, j] < t`` (``<=`` when ``inclusive``), lowest
    index on ties. Its cluster is the seed plus those ``j``.

    Returns ``(clusters, k)`` with clusters as sorted index arrays in creation
    order.
    """
    if t <= 0:
        raise ConfigError(f"threshold must be positive, got {t}")
    s = np.asarray(s)
    n = len(s)
    near = s <= t if inclusive else s < t
    np.fill_diagonal(near, True)
    near_t = np.ascontiguousarray(near.T)
    counts = near.sum(axis=1).astype(np.int64)
    remaining = np.ones(n, dtype=bool)
    clusters = []
    left = n
    while left:
        i = int(np.argmax(np.where(remaining, counts, -1)))
        members = np.flatnonzero(near[i] & remaining)
        clusters.append(members)
        remaining[members] = False
        left -= len(members)
        counts -= near_t[members].sum(axis=0)
    return clusters, len(clusters)


def _check_partition(clusters, n: int) -> None:
    seen = np.zeros(n, dtype=np.int64)
    for c in clusters:
        c = np.asarray(c, dtype=np.int64)
        if len(c) == 0:
            raise ConfigError("empty cluster in partition")
        if c.min() < 0 or c.max() >= n:
            raise ConfigError("cluster member out of range")
        np.add.at(seen, c, 1)
    if not np.all(seen == 1):
        raise ConfigError("clusters do not partition the index set")


def _mean_operator(clusters, n: int) -> sp.csr_matrix:
    # n x k, column c averages over members of cluster c
    rows = np.concatenate([np.asarray(c, dtype=np.int64) for c in clusters])
    cols = np.concatenate([np.full(len(c), j) for j, c in enumerate(clusters)])
    vals = np.concatenate([np.full(len(c), 1.0 / len(c)) for c in clusters])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, len(clusters)))


def coarsen_affinity(s: np.ndarray, clusters) -> np.ndarray:
    """Cluster-level affinity: mean of ``s`` over all cross-cluster pairs."""
    s = np.asarray(s, dtype=np.float64)
    _check_partition(clusters, len(s))
    z = _mean_operator(clusters, len(s))
    left = np.asarray((z.T @ s))
    out = np.asarray((z.T @ left.T)).T
    out = 0.5 * (out + out.T)
    np.clip(out, 0.0, 2.0, out=out)
    np.fill_diagonal(out, 0.0)
    return out


def next_threshold(s: np.ndarray) -> float:
    """Mean over rows of the smallest off-diagonal distance."""
    s = np.asarray(s, dtype=np.float64)
    if len(s) < 2:
        raise ConfigError("need at least 2 clusters to derive a threshold")
    off = s.copy()
    np.fill_diagonal(off, np.inf)
    return float(off.min(axis=1).mean())


def _merge(s: np.ndarray, t: float):
    # strict comparison first; the closed one only if nothing merged, which
    # happens when every row minimum equals t (e.g. two clusters)
    clusters, k = greedy_max_order(s, t)
    if k == len(s):
        clusters, k = greedy_max_order(s, t, inclusive=True)
    return clusters, k


def determine_thresholds(p_valid, t0: float = DEFAULT_T0, cap: int = DEFAULT_CAP,
                         threads: int = 1):
    """Learn the increasing threshold set on validation projections.

    Level 0 clusters the validation rows at ``t0``. Every further level
    coarsens the affinity over the previous clusters, takes the mean of
    row-wise minimum distances as its threshold (never below the previous
    one) and clusters again, until a single cluster remains.

    Returns ``(ThresholdSet, ClusterTree)``; the tree covers the validation
    rows in order.
    """
    if not 0.0 < t0 < 2.0:
        raise ConfigError(f"t0 must lie in (0, 2), got {t0}")
    s = build_affinity(p_valid, cap=cap, threads=threads)
    n = len(s)
    clusters, k = greedy_max_order(s, t0)
    ground = clusters
    thresholds = [float(t0)]
    groupings = []
    while k > 1:
        s = coarsen_affinity(s, clusters)
        t = max(next_threshold(s), thresholds[-1])
        clusters, k = _merge(s, t)
        groupings.append(clusters)
        thresholds.append(t)
        log.debug("validation level %d: t=%.6f k=%d", len(thresholds) - 1, t, k)
    tree = ClusterTree.from_groupings(n, ground, groupings, thresholds)
    return ThresholdSet(tuple(thresholds)), tree


def greedy_first_order(p, t1: float, max_cluster: int = DEFAULT_MAX_CLUSTER,
                       max_clusters: int = DEFAULT_MAX_GROUND_CLUSTERS):
    """Ground-level clustering without a full affinity matrix.

    The first unassigned row seeds a cluster with every unassigned row at
    cosine distance below ``t1``, keeping at most the first ``max_cluster``
    of them in row order. The cluster-level affinity is then the mean pairwise
    distance between members, i.e. ``1 - m_i . m_j`` for the mean unit
    vectors ``m_i`` of each cluster.

    Returns ``(s2, clusters, k)`` where clusters hold row positions.
    """
    if t1 <= 0:
        raise ConfigError(f"threshold must be positive, got {t1}")
    if max_cluster < 1:
        raise ConfigError(f"max_cluster must be >= 1, got {max_cluster}")
    rows = p.rows if isinstance(p, LatentMatrix) else np.asarray(p, dtype=np.float64)
    u = unit_rows(rows)
    remaining = np.arange(len(u))
    clusters = []
    while len(remaining):
        seed = u[remaining[0]]
        near = (1.0 - u[remaining] @ seed) < t1
        near[0] = True
        pos = np.flatnonzero(near)[:max_cluster]
        clusters.append(remaining[pos])
        if len(clusters) > max_clusters:
            raise CapacityError(
                f"more than {max_clusters} ground clusters at threshold {t1:.4g}; "
                "the threshold is too small for this network"
            )
        keep = np.ones(len(remaining), dtype=bool)
        keep[pos] = False
        remaining = remaining[keep]
    means = np.asarray(_mean_operator(clusters, len(u)).T @ u)
    s2 = _symmetrize_zero_diag(_distance_from_unit(means, means))
    return s2, clusters, len(clusters)


GROUND_MODES = ("base", "first")


def mh_ksc(p_test, ts: ThresholdSet, max_cluster: int = DEFAULT_MAX_CLUSTER,
           max_clusters: int = DEFAULT_MAX_GROUND_CLUSTERS,
           ground: str = "base") -> ClusterTree:
    """Multilevel hierarchy of all projected nodes.

    Parameters
    ----------
    p_test : LatentMatrix or array
        Projected rows, one per node.
    ts : ThresholdSet
        Output of ``determine_thresholds``.
    max_cluster, max_clusters : int
        Ground level capacity limits, see ``greedy_first_order``.
    ground : {"base", "first"}
        Threshold driving the ground level. ``"base"`` uses the base
        threshold, so the ground level matches the finest validation level;
        ``"first"`` skips it and starts from the first learned threshold.

    Each later threshold merges the clusters of the level below on their
    coarsened affinity. A threshold that merges nothing produces no level.
    Stops once one cluster remains or the thresholds run out.
    """
    if ground not in GROUND_MODES:
        raise ConfigError(f"ground must be one of {GROUND_MODES}, got {ground!r}")
    if not isinstance(p_test, LatentMatrix):
        p_test = LatentMatrix(rows=np.asarray(p_test, dtype=np.float64),
                              node_ids=np.arange(len(p_test)))
    n = len(p_test)
    # rows covering nodes 0..n-1 in any order are mapped to node ids,
    # anything else (e.g. a validation subset) keeps row positions
    ids = np.asarray(p_test.node_ids)
    by_node = np.array_equal(np.sort(ids), np.arange(n))
    test_t = ts.thresholds if ground == "base" else ts.test_thresholds
    s, clusters, k = greedy_first_order(p_test, test_t[0], max_cluster, max_clusters)
    ground = [np.sort(ids[c]) if by_node else c for c in clusters]
    used = [float(test_t[0])]
    groupings = []
    log.debug("test level 1: t=%.6f k=%d", test_t[0], k)
    for t in test_t[1:]:
        if k == 1:
            break
        merged, k_new = _merge(s, t)
        if k_new == k:
            continue
        groupings.append(merged)
        used.append(float(t))
        k = k_new
        if k > 1:
            s = coarsen_affinity(s, merged)
        log.debug("test level %d: t=%.6f k=%d", len(used), t, k)
    return ClusterTree.from_groupings(n, ground, groupings, used)
