import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ndtr

from truncgraph.errors import ValidationError
from truncgraph.simgen import (MIN_EIGENVALUE, GraphSpec, adjacency, make_ground_truth, make_scheme,
                               sample_latent, truncate)
from truncgraph.truncdist import TruncationScheme


def test_chain_p3():
    t = make_ground_truth(GraphSpec("chain", 3))
    assert t.edges.edges == {(0, 1), (1, 2)} and t.max_degree == 2


def test_hub_single_group():
    t = make_ground_truth(GraphSpec("hub", 4, groups=1))
    assert t.edges.edges == {(0, 1), (0, 2), (0, 3)}
    assert t.max_degree == 3


def test_hub_groups_disjoint():
    t = make_ground_truth(GraphSpec("hub", 12, groups=3))
    assert len(t.edges) == 9
    assert {j for j, _ in t.edges} == {0, 4, 8}


def test_random_edge_count_in_distribution():
    counts = [len(make_ground_truth(GraphSpec("random", 100, edge_prob=1 / 50, seed=s)).edges) for s in range(5)]
    # Binomial(4950, 0.02): mean 99, sd ~ 9.85
    assert abs(np.mean(counts) - 99) <= 3 * 9.85 / np.sqrt(5)
    assert all(60 <= c <= 140 for c in counts)


def test_random_graph_seeded():
    a = adjacency(GraphSpec("random", 20, edge_prob=0.2, seed=3))
    b = adjacency(GraphSpec("random", 20, edge_prob=0.2, seed=3))
    c = adjacency(GraphSpec("random", 20, edge_prob=0.2, seed=4))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("kw", [dict(p=1), dict(edge_prob=0.0), dict(strength=0.0),
                                dict(structure="hub", p=10, groups=3), dict(structure="grid")])
def test_spec_validation(kw):
    with pytest.raises(ValidationError):
        GraphSpec(**kw)


@given(st.sampled_from(["chain", "random", "hub"]), st.integers(2, 24), st.integers(0, 1000),
       st.floats(0.05, 1.0))
def test_truth_invariants(structure, p, seed, strength):
    groups = 2 if p % 2 == 0 else 1
    spec = GraphSpec(structure, p, edge_prob=0.2, groups=groups, strength=strength, seed=seed)
    t = make_ground_truth(spec)
    assert np.abs(np.diag(t.sigma_star) - 1).max() <= 1e-12
    np.linalg.cholesky(t.sigma_star)
    np.linalg.cholesky(t.theta_star)
    A = adjacency(spec)
    assert {(j, k) for j, k in zip(*np.nonzero(np.triu(A, 1)))} == set(t.edges.edges)
    assert t.max_degree == (int(A.sum(axis=1).max()) if A.any() else 0)
    assert np.abs(t.theta_star @ t.sigma_star - np.eye(p)).max() <= 1e-8


def test_shift_targets_min_eigenvalue():
    spec = GraphSpec("chain", 8)
    A = adjacency(spec)
    off = spec.strength * A
    c = MIN_EIGENVALUE - np.linalg.eigvalsh(off)[0]
    assert np.linalg.eigvalsh(off + c * np.eye(8))[0] == pytest.approx(MIN_EIGENVALUE)


def test_sample_latent_identity_covariance():
    t = make_ground_truth(GraphSpec("hub", 5, groups=5))  # hubs of size one: no edges
    assert len(t.edges) == 0 and np.array_equal(t.sigma_star, np.eye(5))
    x = sample_latent(t, 10_000, 0)
    assert np.abs(np.cov(x, rowvar=False) - np.eye(5)).max() <= 0.05


def test_sample_latent_chain_correlation():
    t = make_ground_truth(GraphSpec("chain", 5))
    x = sample_latent(t, 10_000, 1)
    assert abs(np.corrcoef(x[:, 0], x[:, 1])[0, 1] - t.sigma_star[0, 1]) <= 0.05


def test_sample_latent_deterministic():
    t = make_ground_truth(GraphSpec("chain", 4))
    assert np.array_equal(sample_latent(t, 50, 7), sample_latent(t, 50, 7))
    seq = np.random.SeedSequence(5)
    assert np.array_equal(sample_latent(t, 20, seq), sample_latent(t, 20, np.random.SeedSequence(5)))


def test_truncate_examples():
    s = TruncationScheme([-0.5, -0.5], [2.0, 2.0])
    x = np.array([[2.5, 0.1], [1.0, 0.1], [-0.6, 0.1], [-0.5, 0.1]])
    assert truncate(x, s).values[:, 0].tolist() == [0, 1.0, 0, -0.5]
    wide = TruncationScheme([-1e6, -1e6], [1e6, 1e6])
    x = np.random.default_rng(0).standard_normal((30, 2))
    assert np.array_equal(truncate(x, wide).values, x)
    with pytest.raises(ValidationError):
        truncate(x, TruncationScheme([-1.0] * 3, [1.0] * 3))


@given(st.integers(0, 1000))
def test_truncate_idempotent(seed):
    s = make_scheme("decreasing", 4)
    x = np.random.default_rng(seed).standard_normal((25, 4))
    once = truncate(x, s).values
    assert np.array_equal(truncate(once, s).values, once)


def test_censoring_rates_identical():
    t = make_ground_truth(GraphSpec("chain", 6))
    s = make_scheme("identical", 6)
    y = truncate(sample_latent(t, 10_000, 3), s).values
    expect = 1 - (ndtr(2.0) - ndtr(-0.5))
    assert expect == pytest.approx(0.331, abs=5e-4)
    assert np.abs((y == 0).mean(axis=0) - expect).max() <= 0.02


def test_make_scheme_examples():
    s = make_scheme("identical", 3)
    assert s.lower.tolist() == [-0.5] * 3 and s.upper.tolist() == [2.0] * 3
    d = make_scheme("decreasing", 100)
    assert d.upper[0] == 2.0 and d.upper[-1] == 0.5 and np.all(d.lower == -1)
    rates = d.censoring_rates()
    assert rates[0] == pytest.approx(0.18, abs=0.02) and rates[-1] == pytest.approx(0.47, abs=0.01)
    with pytest.raises(ValidationError):
        make_scheme("custom", 3, {"lower": [-1, -1], "upper": [1, 1, 1]})
    with pytest.raises(ValidationError):
        make_scheme("custom", 2, {"lower": [1, -1], "upper": [0, 1]})
    with pytest.raises(ValidationError):
        make_scheme("window", 2)
