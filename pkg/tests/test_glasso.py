import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from truncgraph.errors import ConvergenceError, DomainError, ValidationError
from truncgraph.glasso import (EdgeSet, PrecisionEstimate, SolverConfig, ebic, ebic_select, edge_set,
                               graphical_lasso, kkt_residual, lambda_path, objective, solve_path,
                               stars_choose, stars_instability, stars_select)
from truncgraph.pairlik import estimate_covariance, psd_repair
from truncgraph.simgen import GraphSpec, make_ground_truth, make_scheme, sample_latent, truncate

TOL = 1e-5


def prox_gradient_oracle(S, lam, iters=20000):
    """Proximal gradient on the negated objective, with backtracking to stay PD."""
    p = S.shape[0]
    theta = np.diag(1.0 / np.diag(S))
    off = ~np.eye(p, dtype=bool)

    def f(t):
        sign, logdet = np.linalg.slogdet(t)
        return np.inf if sign <= 0 else -logdet + np.sum(t * S)

    step = 1.0
    for _ in range(iters):
        grad = S - np.linalg.inv(theta)
        while True:
            z = theta - step * grad
            z[off] = np.sign(z[off]) * np.maximum(np.abs(z[off]) - step * lam, 0.0)
            d = z - theta
            if f(z) <= f(theta) + np.sum(grad * d) + np.sum(d * d) / (2 * step):
                break
            step /= 2
        if np.abs(d).max() < 1e-15:
            break
        theta = z
        step *= 1.5
    return 0.5 * (theta + theta.T)


def random_pd(rng, p, cond=5.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    m = q @ np.diag(rng.uniform(1.0, cond, p)) @ q.T
    d = 1 / np.sqrt(np.diag(m))
    return m * d[:, None] * d[None, :]


def test_scalar_case():
    fit = graphical_lasso(np.array([[2.5]]), 0.3)
    assert fit.theta[0, 0] == pytest.approx(0.4)


@pytest.mark.parametrize("seed", range(5))
def test_unpenalised_is_inverse(seed):
    S = random_pd(np.random.default_rng(seed), 5)
    fit = graphical_lasso(S, 0.0, tol=1e-8)
    assert np.abs(fit.theta - np.linalg.inv(S)).max() <= 1e-6


def test_two_by_two_closed_form():
    S = np.array([[1.0, 0.6], [0.6, 1.0]])
    fit = graphical_lasso(S, 0.2)
    expect = np.linalg.inv(np.array([[1.0, 0.4], [0.4, 1.0]]))
    assert fit.w[0, 1] == pytest.approx(0.4, abs=1e-12)
    assert np.abs(fit.theta - expect).max() <= 1e-8
    assert np.abs(prox_gradient_oracle(S, 0.2) - expect).max() <= 1e-8
    assert edge_set(fit).edges == {(0, 1)}


def test_soft_threshold_kill():
    S = np.array([[1.0, 0.15], [0.15, 2.0]])
    fit = graphical_lasso(S, 0.2)
    assert fit.theta[0, 1] == 0.0
    assert np.allclose(np.diag(fit.theta), [1.0, 0.5])


@given(st.integers(0, 10_000), st.integers(3, 8), st.floats(0.01, 0.5))
def test_solver_invariants(seed, p, lam):
    S = random_pd(np.random.default_rng(seed), p)
    fit = graphical_lasso(S, lam)
    np.linalg.cholesky(fit.theta)
    assert np.array_equal(fit.theta, fit.theta.T)
    assert np.allclose(fit.w, fit.w.T, atol=1e-12)
    assert np.array_equal(np.diag(fit.w), np.diag(S))
    assert fit.kkt_residual <= 10 * TOL
    assert kkt_residual(fit.theta, fit.w, S, lam) == pytest.approx(fit.kkt_residual, abs=1e-12)


@given(st.integers(0, 10_000), st.floats(0.02, 0.3))
def test_matches_oracle(seed, lam):
    S = random_pd(np.random.default_rng(seed), 4)
    fit = graphical_lasso(S, lam, tol=1e-9, inner_tol=1e-12)
    oracle = prox_gradient_oracle(S, lam)
    assert objective(fit.theta, S, lam) >= objective(oracle, S, lam) - 1e-8
    assert np.abs(fit.theta - oracle).max() <= 1e-5


def test_objective_monotone_per_sweep():
    S = random_pd(np.random.default_rng(3), 12, cond=20)
    trace = []
    graphical_lasso(S, 0.05, trace=trace)
    assert len(trace) >= 2
    assert np.all(np.diff(trace) >= -1e-10)


@given(st.integers(0, 10_000))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    S = random_pd(rng, 6)
    perm = rng.permutation(6)
    a = graphical_lasso(S, 0.1, tol=1e-9).theta
    b = graphical_lasso(S[np.ix_(perm, perm)], 0.1, tol=1e-9).theta
    assert np.abs(a[np.ix_(perm, perm)] - b).max() <= 1e-6


def test_warm_start_same_solution():
    S = random_pd(np.random.default_rng(8), 8)
    cold = graphical_lasso(S, 0.05, tol=1e-9)
    warm = graphical_lasso(S, 0.05, tol=1e-9, warm_start=graphical_lasso(S, 0.2))
    assert np.abs(cold.theta - warm.theta).max() <= 1e-6


def test_errors():
    with pytest.raises(DomainError):
        graphical_lasso(np.array([[1.0, 0.0], [0.0, 0.0]]), 0.1)
    with pytest.raises(ValidationError):
        graphical_lasso(np.array([[1.0, 0.2], [0.3, 1.0]]), 0.1)
    with pytest.raises(DomainError):
        graphical_lasso(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)
    with pytest.raises(ConvergenceError):
        graphical_lasso(random_pd(np.random.default_rng(0), 10, cond=50), 0.01, max_iter=1)


def test_edge_set_examples():
    assert len(edge_set(np.eye(4))) == 0
    chain = np.eye(5) + 0.4 * (np.eye(5, k=1) + np.eye(5, k=-1))
    assert edge_set(chain).edges == {(i, i + 1) for i in range(4)}
    es = EdgeSet(frozenset({(3, 1), (0, 2)}))
    assert (1, 3) in es and (3, 1) in es and len(es) == 2
    assert list(es) == [(0, 2), (1, 3)]
    assert es.degrees(4).tolist() == [1, 1, 1, 1]
    with pytest.raises(ValidationError):
        EdgeSet(frozenset({(2, 2)}))


def test_lambda_path():
    S = np.array([[1.0, 0.6, 0.1], [0.6, 1.0, -0.2], [0.1, -0.2, 1.0]])
    path = lambda_path(S, 3, 0.01)
    # geometric spacing: the midpoint is 0.6 * sqrt(0.01)
    assert np.allclose(path, [0.6, 0.06, 0.006], rtol=1e-14)
    assert np.all(np.diff(lambda_path(S, 10, 0.1)) < 0)
    assert len(edge_set(graphical_lasso(S, path[0]))) == 0
    with pytest.raises(ValidationError):
        lambda_path(S, 1, 0.1)
    with pytest.raises(ValidationError):
        lambda_path(np.eye(3), 5, 0.1)


def test_solve_path_any_order():
    S = random_pd(np.random.default_rng(1), 6)
    path = [0.05, 0.3, 0.1]
    fits = solve_path(S, path)
    assert [f.lam for f in fits] == path


def test_ebic_single_point_and_identity():
    S = random_pd(np.random.default_rng(2), 5)
    lam, fit = ebic_select(S, 100, [0.1])
    assert lam == 0.1 and fit.lam == 0.1
    lam, fit = ebic_select(np.eye(5), 100, [0.3, 0.2, 0.1])
    assert lam == 0.3 and len(edge_set(fit)) == 0


def test_ebic_formula():
    S = np.array([[1.0, 0.6], [0.6, 1.0]])
    fit = graphical_lasso(S, 0.2)
    _, logdet = np.linalg.slogdet(fit.theta)
    expect = -50 * (logdet - np.sum(fit.theta * S)) + np.log(50) + 4 * 0.5 * np.log(2)
    assert ebic(fit, S, 50, 0.5) == pytest.approx(expect, rel=1e-14)


def test_stars_instability_examples():
    same = np.ones((20, 4, 6), dtype=bool)
    same[:, 0] = False
    assert np.array_equal(stars_instability(same), np.zeros(4))
    assert stars_choose(stars_instability(same), 0.05) == 3
    half = np.zeros((20, 1, 3), dtype=bool)
    half[:10] = True
    assert stars_instability(half)[0] == pytest.approx(0.5)
    # the running maximum blocks denser penalties past an unstable one
    assert stars_choose(np.array([0.0, 0.2, 0.01]), 0.05) == 0


def test_stars_identical_subsamples_pick_densest():
    S = random_pd(np.random.default_rng(4), 5)
    path = lambda_path(S, 5, 0.1)
    lam, fit = stars_select(lambda idx: S, 200, path, subsamples=4, rng=0)
    assert lam == pytest.approx(path.min())
    with pytest.raises(ValidationError):
        stars_select(lambda idx: S, 50, path, subsamples=4)
    with pytest.raises(ValidationError):
        stars_select(lambda idx: S, 200, path, subsamples=1)


def _chain_estimator(n, seed):
    truth = make_ground_truth(GraphSpec("chain", 10))
    data = truncate(sample_latent(truth, n, seed), make_scheme("identical", 10))
    return truth, lambda idx: psd_repair(estimate_covariance(data.rows(idx))).matrix


@pytest.mark.slow
def test_ebic_recovers_chain():
    # Known to fail at the default generator strength: the chain violates the
    # incoherence condition, the lasso path carries spurious skip-one entries
    # below lam ~ 0.24 and EBIC keeps preferring the densest point.
    hits = 0
    for seed in range(10):
        truth, est = _chain_estimator(2000, seed)
        S = est(np.arange(2000))
        _, fit = ebic_select(S, 2000, lambda_path(S))
        hits += edge_set(fit) == truth.edges
    assert hits >= 8


@pytest.mark.slow
def test_stars_recall_on_chain():
    recalls = []
    for seed in range(10):
        truth, est = _chain_estimator(2000, seed)
        S = est(np.arange(2000))
        _, fit = stars_select(est, 2000, lambda_path(S), 20, 0.05, seed, S_full=S)
        found = edge_set(fit)
        recalls.append(np.mean([e in found for e in truth.edges]))
    assert np.median(recalls) >= 0.9


@pytest.mark.slow
def test_path_edge_counts_nested_on_chain():
    truth, est = _chain_estimator(1000, 0)
    S = est(np.arange(1000))
    counts = [len(edge_set(f)) for f in solve_path(S, lambda_path(S))]
    # nesting is not guaranteed for the graphical lasso: report, do not fail
    if counts != sorted(counts):
        warnings.warn(f"edge counts along the path are not monotone: {counts}")
    assert counts[0] == 0 and counts[-1] >= len(truth.edges)
