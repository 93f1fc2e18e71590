"""Two-level planted-partition benchmark graphs.

Every node spends, in expectation, a fraction ``1 - mu2`` of its degree inside
its micro community, ``mu2 - mu1`` in the rest of its macro community and
``mu1`` outside its macro community. Edges are independent Bernoulli draws
whose probability is constant within each pair of micro communities.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .graph import Graph


@dataclass(frozen=True)
class BenchmarkSpec:
    micro_sizes: tuple  # tuple of tuples: micro community sizes per macro community
    mu1: float = 0.1
    mu2: float = 0.2
    avg_degree: float = 20.0
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(tuple(int(s) for s in group) for group in self.micro_sizes)
        object.__setattr__(self, "micro_sizes", sizes)
        if not sizes or any(len(g) == 0 for g in sizes):
            raise ConfigError("every macro community needs at least one micro community")
        if any(s < 1 for g in sizes for s in g):
            raise ConfigError("community sizes must be >= 1")
        if not (0.0 <= self.mu1 <= 1.0 and 0.0 <= self.mu2 <= 1.0):
            raise ConfigError("mixing parameters must lie in [0, 1]")
        if self.mu1 > self.mu2:
            raise ConfigError(f"mu1 ({self.mu1}) must not exceed mu2 ({self.mu2})")
        if self.avg_degree <= 0:
            raise ConfigError("avg_degree must be positive")

    @property
    def n_nodes(self) -> int:
        return sum(sum(g) for g in self.micro_sizes)


def even_sizes(total: int, parts: int) -> list[int]:
    """Split ``total`` into ``parts`` sizes differing by at most one."""
    if parts < 1 or total < parts:
        raise ConfigError(f"cannot split {total} into {parts} non-empty parts")
    base, extra = divmod(total, parts)
    return [base + 1 if i < extra else base for i in range(parts)]


def layout(n_nodes: int, n_macro: int, n_micro: int) -> tuple:
    """Near-uniform micro community sizes grouped into ``n_macro`` macro communities."""
    if n_micro < n_macro:
        raise ConfigError(f"need at least as many micro ({n_micro}) as macro ({n_macro}) communities")
    sizes = even_sizes(n_nodes, n_micro)
    per_macro = even_sizes(n_micro, n_macro)
    out = []
    pos = 0
    for cnt in per_macro:
        out.append(tuple(sizes[pos : pos + cnt]))
        pos += cnt
    return tuple(out)


@lru_cache(maxsize=256)
def _triu(n: int):
    return np.triu_indices(n, 1)


def _node_probabilities(spec: BenchmarkSpec):
    d = spec.avg_degree
    n = spec.n_nodes
    micro_size, macro_size, macro_of = [], [], []
    for a, group in enumerate(spec.micro_sizes):
        for s in group:
            micro_size.append(s)
            macro_size.append(sum(group))
            macro_of.append(a)
    micro_size = np.asarray(micro_size, dtype=np.float64)
    macro_size = np.asarray(macro_size, dtype=np.float64)

    def rate(budget, pool, what):
        out = np.zeros_like(pool)
        empty = pool <= 0
        if budget > 0 and np.any(empty):
            raise ConfigError(f"no {what} partners to place a degree budget of {budget:.3g}")
        out[~empty] = budget / pool[~empty]
        if np.any(out > 1.0):
            raise ConfigError(
                f"infeasible spec: {what} budget {budget:.3g} exceeds available partners"
            )
        return out

    p_micro = rate((1.0 - spec.mu2) * d, micro_size - 1, "intra-micro")
    p_macro = rate((spec.mu2 - spec.mu1) * d, macro_size - micro_size, "intra-macro")
    p_out = rate(spec.mu1 * d, n - macro_size, "inter-macro")
    return micro_size.astype(np.int64), np.asarray(macro_of), p_micro, p_macro, p_out


def generate(spec: BenchmarkSpec):
    """Sample a benchmark graph.

    Returns ``(graph, macro_labels, micro_labels)``; the label arrays are
    indexed by node and micro communities nest inside macro communities.
    """
    n = spec.n_nodes
    if n < 10:
        raise ConfigError(f"benchmark needs at least 10 nodes, got {n}")
    if (1.0 - spec.mu2) * spec.avg_degree < 1.0:
        raise ConfigError("expected intra-micro degree must be at least 1")
    sizes, macro_of, p_micro, p_macro, p_out = _node_probabilities(spec)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n_blocks = len(sizes)
    rng = np.random.default_rng(spec.seed)

    src, dst = [], []
    for a in range(n_blocks):
        sa = int(sizes[a])
        for b in range(a, n_blocks):
            if a == b:
                p = p_micro[a]
                pairs = sa * (sa - 1) // 2
            else:
                pool = p_macro if macro_of[a] == macro_of[b] else p_out
                p = 0.5 * (pool[a] + pool[b])
                pairs = sa * int(sizes[b])
            if pairs == 0 or p <= 0.0:
                continue
            m = int(rng.binomial(pairs, min(p, 1.0)))
            if m == 0:
                continue
            idx = rng.choice(pairs, size=m, replace=False)
            if a == b:
                iu, ju = _triu(sa)
                u, v = iu[idx], ju[idx]
            else:
                u, v = np.divmod(idx, int(sizes[b]))
            src.append(offsets[a] + u)
            dst.append(offsets[b] + v)

    edges = np.column_stack([np.concatenate(src), np.concatenate(dst)]) if src else np.empty((0, 2))
    graph = Graph.from_edges(n, edges.astype(np.int64))
    micro = np.repeat(np.arange(n_blocks), sizes)
    macro = np.asarray(macro_of)[micro]
    return graph, macro, micro
