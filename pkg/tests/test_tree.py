import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhksc.errors import ConfigError, InputError
from mhksc.tree import (
    ClusterTree, ordered_membership, read_tree, to_dot, to_newick, tree_to_dict,
    write_membership_table, write_tree,
)


@pytest.fixture
def tree():
    # 6 nodes: ground {0,3} {1} {2,5} {4}; level 2 {c0,c1} {c2,c3}; level 3 one cluster
    return ClusterTree.from_groupings(
        6, [[0, 3], [1], [2, 5], [4]], [[[0, 1], [2, 3]], [[0, 1]]], [0.15, 0.5, 0.9]
    )


@st.composite
def random_trees(draw):
    n = draw(st.integers(1, 30))
    rng = np.random.default_rng(draw(st.integers(0, 10_000)))
    labels = rng.integers(0, draw(st.integers(1, n)), n)
    ground = [np.flatnonzero(labels == c).tolist() for c in np.unique(labels)]
    groupings, k = [], len(ground)
    for _ in range(draw(st.integers(0, 4))):
        up = rng.integers(0, max(1, k // 2), k)
        groupings.append([np.flatnonzero(up == c).tolist() for c in np.unique(up)])
        k = len(groupings[-1])
    thresholds = np.cumsum(rng.random(1 + len(groupings))).tolist()
    return ClusterTree.from_groupings(n, ground, groupings, thresholds)


def test_structure(tree):
    tree.validate()
    assert tree.cluster_counts() == [4, 2, 1]
    assert tree.assignments[1].tolist() == [0, 0, 1, 0, 1, 1]
    assert [c.tolist() for c in tree.clusters(1)] == [[0, 1, 3], [2, 4, 5]]
    assert [c.tolist() for c in tree.children(1)] == [[0, 1], [2, 3]]
    with pytest.raises(ValueError):
        tree.children(0)


def test_validate_catches_broken_nesting(tree):
    tree.assignments[1][0] = 1
    with pytest.raises(AssertionError):
        tree.validate()


def test_constructor_checks():
    with pytest.raises(ValueError):
        ClusterTree(2, [np.zeros(2)], [], [0.1, 0.2])
    with pytest.raises(ValueError):
        ClusterTree(2, [np.zeros(2), np.zeros(2)], [], [0.1, 0.2])


def test_json_document(tree, tmp_path):
    write_tree(tmp_path / "t.json", tree, list("abcdef"), [0.15, 0.5, 0.9, 0.95])
    doc = json.loads((tmp_path / "t.json").read_text())
    assert doc["levels"][0]["clusters"][0] == {"id": 0, "members": [0, 3]}
    assert doc["levels"][1]["clusters"][1] == {"id": 1, "children": [2, 3]}
    assert doc["level_thresholds"] == [0.15, 0.5, 0.9]
    assert doc["thresholds"] == [0.15, 0.5, 0.9, 0.95]
    assert doc["membership"][1] == [0, 0, 1, 0, 1, 1]
    back, labels = read_tree(tmp_path / "t.json")
    assert back == tree and labels == list("abcdef")


def test_read_tree_errors(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(InputError):
        read_tree(tmp_path / "bad.json")
    (tmp_path / "other.json").write_text('{"format": "x"}')
    with pytest.raises(InputError):
        read_tree(tmp_path / "other.json")


@settings(max_examples=40)
@given(random_trees())
def test_round_trip_and_ordering(tmp_path_factory, t):
    t.validate()
    path = tmp_path_factory.mktemp("tree") / "t.json"
    write_tree(path, t)
    assert read_tree(path)[0] == t
    m = ordered_membership(t)
    assert m.shape == (t.n_nodes, 1 + t.n_levels)
    assert sorted(m[:, 0].tolist()) == list(range(t.n_nodes))
    for col in range(1, m.shape[1]):
        # every cluster forms one contiguous block of rows
        runs = m[np.flatnonzero(np.diff(m[:, col], prepend=-1)), col]
        assert len(runs) == len(set(runs.tolist()))


def test_membership_table(tree, tmp_path):
    write_membership_table(tmp_path / "m.tsv", tree, list("abcdef"))
    lines = (tmp_path / "m.tsv").read_text().splitlines()
    assert lines[0] == "node\tlevel_1\tlevel_2\tlevel_3"
    assert lines[3] == "c\t2\t1\t0"
    assert len(lines) == 7


def test_dot_single_root(tree):
    dot = to_dot(tree)
    assert dot.startswith("digraph")
    assert '"L1C0" -> "L2C0"' in dot
    assert "root" not in dot  # top level is already one cluster
    two = ClusterTree.from_groupings(4, [[0, 1], [2, 3]], [], [0.15])
    dot2 = to_dot(two)
    assert dot2.count("-> \"root\"") == 2


def test_newick(tree):
    assert to_newick(tree) == "((L1C0,L1C1)L2C0,(L1C2,L1C3)L2C1)L3C0;\n"
    assert to_newick(tree, 1) == "(L2C0,L2C1)L3C0;\n"


@pytest.mark.parametrize("fn", [to_dot, to_newick, ordered_membership])
def test_level_range(tree, fn):
    with pytest.raises(ConfigError):
        fn(tree, 3)
    with pytest.raises(ConfigError):
        fn(tree, -1)


def test_tree_to_dict_default_labels(tree):
    assert tree_to_dict(tree)["node_labels"] == list(range(6))
