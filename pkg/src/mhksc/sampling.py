"""Representative subset selection and the train/validation/test split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import Graph

DEFAULT_CAP = 10_000


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.15
    valid_fraction: float = 0.15
    cap: int = DEFAULT_CAP
    seed: int = 0

    def __post_init__(self):
        for name in ("train_fraction", "valid_fraction"):
            f = getattr(self, name)
            if not 0.0 < f <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {f}")
        if self.cap < 1:
            raise ConfigError(f"cap must be positive, got {self.cap}")

    def sizes(self, n_nodes: int) -> tuple[int, int]:
        n_tr = min(_round_half_up(self.train_fraction * n_nodes), self.cap)
        n_valid = min(_round_half_up(self.valid_fraction * n_nodes), self.cap)
        return n_tr, n_valid


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray


def furs_select(g: Graph, size: int, seed: int = 0, exclude=None) -> np.ndarray:
    """Degree-greedy selection with neighborhood deactivation.

    Within an activation round nodes are visited by decreasing degree (ties to
    the lower index); each pick deactivates its direct neighbors. When the
    round runs out of active nodes every unselected node is reactivated.
    Nodes in ``exclude`` are never selected.

    ``seed`` is accepted for interface symmetry with :func:`uniform_select`;
    the procedure has no random ties left to break.

    Returns the selected node indices in selection order.
    """
    del seed
    n = g.n_nodes
    blocked = np.zeros(n, dtype=bool)
    if exclude is not None:
        blocked[np.asarray(exclude, dtype=np.int64)] = True
    available = n - int(blocked.sum())
    if size < 1 or size > available:
        raise ConfigError(f"cannot select {size} nodes from {available} available")

    deg = g.degrees()
    order = np.lexsort((np.arange(n), -deg))
    indptr, indices = g.indptr, g.indices
    selected = np.zeros(n, dtype=bool)
    picked: list[int] = []
    while len(picked) < size:
        active = ~(selected | blocked)
        for v in order[active[order]]:
            if not active[v]:
                continue
            picked.append(int(v))
            selected[v] = True
            active[v] = False
            active[indices[indptr[v] : indptr[v + 1]]] = False
            if len(picked) == size:
                break
    return np.asarray(picked, dtype=np.int64)


def uniform_select(g: Graph, size: int, seed: int = 0, exclude=None) -> np.ndarray:
    """Uniform random subset, used as a baseline in tests."""
    pool = np.ones(g.n_nodes, dtype=bool)
    if exclude is not None:
        pool[np.asarray(exclude, dtype=np.int64)] = False
    candidates = np.flatnonzero(pool)
    if size < 1 or size > len(candidates):
        raise ConfigError(f"cannot select {size} nodes from {len(candidates)} available")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(candidates, size=size, replace=False))


def make_split(g: Graph, spec: SplitSpec) -> Split:
    """Training and validation sets by FURS; the test set is every node."""
    n = g.n_nodes
    n_tr, n_valid = spec.sizes(n)
    if n_tr < 2:
        raise ConfigError(f"training set of {n_tr} nodes is too small (need >= 2)")
    if n_valid < 1 or n_tr + n_valid > n:
        raise ConfigError(
            f"train ({n_tr}) + validation ({n_valid}) sizes do not fit in {n} nodes"
        )
    train = furs_select(g, n_tr, spec.seed)
    valid = furs_select(g, n_valid, spec.seed, exclude=train)
    return Split(train=train, valid=valid, test=np.arange(n, dtype=np.int64))
