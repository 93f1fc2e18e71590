import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from mhksc.benchgen import BenchmarkSpec, even_sizes, generate, layout
from mhksc.errors import ConfigError
from mhksc.metrics import ari


def test_layout():
    assert even_sizes(10, 3) == [4, 3, 3]
    sizes = layout(2000, 9, 37)
    assert len(sizes) == 9 and sum(len(g) for g in sizes) == 37
    assert sum(sum(g) for g in sizes) == 2000
    flat = [s for g in sizes for s in g]
    assert max(flat) - min(flat) <= 1
    with pytest.raises(ConfigError):
        layout(100, 5, 3)
    with pytest.raises(ConfigError):
        even_sizes(2, 3)


def test_no_mixing_gives_micro_components():
    spec = BenchmarkSpec(layout(300, 3, 6), mu1=0.0, mu2=0.0, avg_degree=10, seed=3)
    g, macro, micro = generate(spec)
    _, comp = connected_components(g.to_csr(), directed=False)
    assert ari(comp, micro) == 1.0


def test_net1_fixture_shape():
    g, macro, micro = generate(BenchmarkSpec(layout(2000, 9, 37), 0.1, 0.2, 20, seed=1))
    assert g.n_nodes == 2000
    assert len(np.unique(macro)) == 9 and len(np.unique(micro)) == 37
    assert abs(g.degrees().mean() - 20) <= 0.15 * 20


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_empirical_mixing(seed):
    g, macro, micro = generate(BenchmarkSpec(layout(2000, 9, 37), 0.1, 0.2, 20, seed=seed))
    e = g.edges()
    deg = g.degrees()
    out_macro = np.bincount(e[:, 0], weights=macro[e[:, 0]] != macro[e[:, 1]], minlength=2000)
    out_macro += np.bincount(e[:, 1], weights=macro[e[:, 0]] != macro[e[:, 1]], minlength=2000)
    out_micro = np.bincount(e[:, 0], weights=micro[e[:, 0]] != micro[e[:, 1]], minlength=2000)
    out_micro += np.bincount(e[:, 1], weights=micro[e[:, 0]] != micro[e[:, 1]], minlength=2000)
    hi = deg >= 20
    assert abs((out_macro[hi] / deg[hi]).mean() - 0.1) <= 0.05
    assert abs((out_micro[hi] / deg[hi]).mean() - 0.2) <= 0.05


def test_micro_refines_macro_and_determinism():
    spec = BenchmarkSpec(layout(600, 4, 10), 0.1, 0.3, 15, seed=9)
    g1, macro, micro = generate(spec)
    for c in np.unique(micro):
        assert len(np.unique(macro[micro == c])) == 1
    g2, _, _ = generate(spec)
    assert g1 == g2
    assert g1 != generate(BenchmarkSpec(spec.micro_sizes, 0.1, 0.3, 15, seed=10))[0]


@pytest.mark.parametrize("n,k", [(500, 5), (1000, 8)])
def test_mean_degree(n, k):
    g, _, _ = generate(BenchmarkSpec(layout(n, 2, k), 0.1, 0.2, 12, seed=1))
    assert abs(g.degrees().mean() - 12) <= 0.15 * 12


@pytest.mark.parametrize("kw", [
    dict(micro_sizes=((4, 4),), avg_degree=20),           # micro too small for its budget
    dict(micro_sizes=((3, 3),), avg_degree=20),           # fewer than 10 nodes
    dict(micro_sizes=((50,), (50,)), avg_degree=1.0),     # intra degree below 1
    dict(micro_sizes=((50, 50),), mu1=0.3, mu2=0.2),      # mu1 > mu2
    dict(micro_sizes=((50, 50),), mu1=0.1),               # no partners outside the macro
    dict(micro_sizes=((50, 0),)),
    dict(micro_sizes=()),
    dict(micro_sizes=((50,),), avg_degree=0),
])
def test_infeasible_specs(kw):
    with pytest.raises(ConfigError):
        generate(BenchmarkSpec(**kw))
