import numpy as np
import pytest
from hypothesis import settings

from mhksc.graph import Graph

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

ACCEPTANCE_LINES: list[str] = []


def random_graph(n: int, p: float, seed: int, connected: bool = True) -> Graph:
    """Erdos-Renyi graph; with ``connected`` a Hamiltonian path is added so
    every node has degree >= 1."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    edges = np.column_stack([iu[keep], ju[keep]])
    if connected:
        perm = rng.permutation(n)
        edges = np.vstack([edges, np.column_stack([perm[:-1], perm[1:]])])
    return Graph.from_edges(n, edges)


@pytest.fixture
def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def two_triangles():
    return Graph.from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


@pytest.fixture
def path4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def star4():
    return Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
