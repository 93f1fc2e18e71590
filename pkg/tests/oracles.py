"""Slow reference implementations used as test oracles."""

import numpy as np


def naive_greedy_max_order(s, t):
    """Recount within-threshold neighbours from scratch every round."""
    n = len(s)
    remaining = list(range(n))
    clusters = []
    while remaining:
        best, best_count = None, -1
        for i in remaining:
            c = sum(1 for j in remaining if j == i or s[i][j] < t)
            if c > best_count:
                best, best_count = i, c
        members = sorted(j for j in remaining if j == best or s[best][j] < t)
        clusters.append(members)
        remaining = [j for j in remaining if j not in members]
    return clusters


def naive_coarsen(s, clusters):
    k = len(clusters)
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            if a != b:
                out[a, b] = np.mean([s[i][j] for i in clusters[a] for j in clusters[b]])
    return out


def random_affinity(rng, n, scale=2.0, levels=None):
    """Symmetric zero-diagonal matrix in [0, 2]; ``levels`` quantizes values to
    force ties."""
    x = rng.random((n, n)) * scale
    if levels:
        x = np.round(x * levels) / levels
    s = np.triu(x, 1)
    s = s + s.T
    return np.clip(s, 0.0, 2.0)


def naive_greedy_max_order_np(s, t):
    """Same rule as ``naive_greedy_max_order`` with vectorized recounting."""
    n = len(s)
    near = np.asarray(s) < t
    near[np.arange(n), np.arange(n)] = True
    remaining = np.arange(n)
    clusters = []
    while len(remaining):
        sub = near[np.ix_(remaining, remaining)]
        seed = int(np.argmax(sub.sum(axis=1)))
        members = remaining[sub[seed]]
        clusters.append(members.tolist())
        remaining = remaining[~sub[seed]]
    return clusters
