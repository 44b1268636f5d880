"""Graphical lasso with an off-diagonal l1 penalty, plus penalty selection.

Maximises ``log det(Theta) - tr(Theta S) - lam * sum_{j != k} |Theta_jk|``
by blockwise coordinate descent on the covariance ``W = Theta^{-1}``: each
column update solves a lasso problem by cyclic coordinate descent. The
diagonal is not penalised, so ``diag(W) = diag(S)`` throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import ConvergenceError, DomainError, NumericalError, ValidationError


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-5
    max_iter: int = 200
    inner_tol: float = 1e-7
    inner_max_iter: int = 1000
    path_length: int = 10
    path_ratio: float = 0.1


@dataclass(frozen=True)
class PrecisionEstimate:
    theta: np.ndarray
    w: np.ndarray
    lam: float
    iterations: int
    kkt_residual: float
    beta: np.ndarray | None = None  # column regression coefficients, for warm starts

    def edges(self, zero_tol: float = 1e-6) -> "EdgeSet":
        return edge_set(self, zero_tol)


@dataclass(frozen=True)
class EdgeSet:
    edges: frozenset

    def __post_init__(self):
        norm = frozenset((min(j, k), max(j, k)) for j, k in self.edges)
        if any(j == k for j, k in norm):
            raise ValidationError("edge sets have no self-loops")
        object.__setattr__(self, "edges", norm)

    def __len__(self):
        return len(self.edges)

    def __contains__(self, pair):
        j, k = pair
        return (min(j, k), max(j, k)) in self.edges

    def __iter__(self):
        return iter(sorted(self.edges))

    def degrees(self, p: int) -> np.ndarray:
        deg = np.zeros(p, dtype=int)
        for j, k in self.edges:
            deg[j] += 1
            deg[k] += 1
        return deg


def edge_set(estimate, zero_tol: float = 1e-6) -> EdgeSet:
    """Pairs ``j < k`` whose precision entry exceeds ``zero_tol`` in magnitude.

    Accepts a :class:`PrecisionEstimate` or a bare matrix.
    """
    theta = estimate.theta if isinstance(estimate, PrecisionEstimate) else np.asarray(estimate)
    jj, kk = np.nonzero(np.triu(np.abs(theta) > zero_tol, k=1))
    return EdgeSet(frozenset(zip(jj.tolist(), kk.tolist())))


@njit(cache=True)
def _lasso_cd(V, u, lam, beta, tol, max_iter):
    # min_b 0.5 b'Vb - u'b + lam |b|_1, in place on beta
    m = u.shape[0]
    for _ in range(max_iter):
        dmax = 0.0
        for k in range(m):
            r = u[k]
            for l in range(m):
                if l != k:
                    r -= V[k, l] * beta[l]
            if r > lam:
                new = (r - lam) / V[k, k]
            elif r < -lam:
                new = (r + lam) / V[k, k]
            else:
                new = 0.0
            d = abs(new - beta[k])
            if d > dmax:
                dmax = d
            beta[k] = new
        if dmax < tol:
            return True
    return False


@njit(cache=True)
def _sweeps(S, lam, W, B, tol, max_sweeps, inner_tol, inner_max):
    """Run up to ``max_sweeps`` column sweeps in place; returns (sweeps, converged)."""
    p = S.shape[0]
    idx = np.empty(p - 1, dtype=np.int64)
    V = np.empty((p - 1, p - 1))
    u = np.empty(p - 1)
    beta = np.empty(p - 1)
    for sweep in range(max_sweeps):
        change = 0.0
        for j in range(p):
            c = 0
            for l in range(p):
                if l != j:
                    idx[c] = l
                    c += 1
            for a in range(p - 1):
                u[a] = S[idx[a], j]
                beta[a] = B[idx[a], j]
                for b in range(p - 1):
                    V[a, b] = W[idx[a], idx[b]]
            _lasso_cd(V, u, lam, beta, inner_tol, inner_max)
            for a in range(p - 1):
                B[idx[a], j] = beta[a]
                w = 0.0
                for b in range(p - 1):
                    w += V[a, b] * beta[b]
                d = abs(w - W[idx[a], j])
                if d > change:
                    change = d
                W[idx[a], j] = w
                W[j, idx[a]] = w
        if change <= tol:
            return sweep + 1, True
    return max_sweeps, False


def _theta_from(W, B):
    p = W.shape[0]
    theta = np.zeros_like(W)
    for j in range(p):
        others = np.arange(p) != j
        beta = B[others, j]
        t = 1.0 / (W[j, j] - W[others, j] @ beta)
        theta[j, j] = t
        theta[others, j] = -beta * t
    return 0.5 * (theta + theta.T)


def kkt_residual(theta, w, S, lam) -> float:
    """Largest violation of the off-diagonal stationarity conditions."""
    p = S.shape[0]
    if p < 2:
        return 0.0
    off = ~np.eye(p, dtype=bool)
    g = (w - S)[off]
    t = theta[off]
    active = t != 0
    res = np.where(active, np.abs(g - lam * np.sign(t)), np.maximum(0.0, np.abs(g) - lam))
    return float(res.max())


def objective(theta, S, lam) -> float:
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    off = np.abs(theta).sum() - np.abs(np.diag(theta)).sum()
    return float(logdet - np.sum(theta * S) - lam * off)


def _check_input(S):
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"S must be square, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=1e-10):
        raise ValidationError("S must be symmetric")
    if np.any(np.diag(S) <= 0):
        raise DomainError("S must have a positive diagonal")
    return 0.5 * (S + S.T)


def graphical_lasso(S, lam: float, tol: float = 1e-5, max_iter: int = 200,
                    inner_tol: float = 1e-7, inner_max_iter: int = 1000,
                    warm_start: PrecisionEstimate | None = None,
                    trace: list | None = None) -> PrecisionEstimate:
    """Solve the off-diagonal-penalised Gaussian likelihood problem.

    Parameters
    ----------
    S : (p, p) array
        Symmetric input covariance with positive diagonal. Must be positive
        definite when ``lam == 0``.
    lam : float
        Penalty on the off-diagonal entries of the precision matrix.
    tol : float
        Stop when no entry of ``W`` moves more than ``tol`` within a sweep.
    warm_start : PrecisionEstimate, optional
        Previous solution (typically at a larger penalty) to start from.
    trace : list, optional
        If given, the objective after every sweep is appended to it.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` sweeps do not reach ``tol``.
    """
    S = _check_input(S)
    if lam < 0:
        raise DomainError("penalty must be non-negative")
    p = S.shape[0]
    if lam == 0:
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise DomainError("S must be positive definite when lam = 0") from None
    if p == 1:
        theta = np.array([[1.0 / S[0, 0]]])
        return PrecisionEstimate(theta, S.copy(), float(lam), 0, 0.0, np.zeros((1, 1)))

    if warm_start is not None and warm_start.beta is not None and warm_start.w.shape == S.shape:
        W = np.array(warm_start.w, dtype=float)
        np.fill_diagonal(W, np.diag(S))
        B = np.array(warm_start.beta, dtype=float)
    else:
        W = S.copy()
        B = np.zeros((p, p))

    if trace is None:
        sweeps, converged = _sweeps(S, float(lam), W, B, tol, max_iter, inner_tol, inner_max_iter)
    else:
        sweeps, converged = 0, False
        while sweeps < max_iter and not converged:
            _, converged = _sweeps(S, float(lam), W, B, tol, 1, inner_tol, inner_max_iter)
            sweeps += 1
            trace.append(objective(_theta_from(W, B), S, lam))
    if not converged:
        raise ConvergenceError(f"graphical lasso did not converge in {max_iter} sweeps (lam={lam})")

    theta = _theta_from(W, B)
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        raise NumericalError("graphical lasso returned a non positive definite precision") from None
    res = kkt_residual(theta, W, S, lam)
    return PrecisionEstimate(theta, W, float(lam), int(sweeps), res, B)


def lambda_path(S, n_points: int = 10, ratio: float = 0.1) -> np.ndarray:
    """Log-spaced penalties from ``max_{j != k} |S_jk|`` down to ``ratio`` times it."""
    if n_points < 2 or not 0.0 < ratio < 1.0:
        raise ValidationError("need n_points >= 2 and 0 < ratio < 1")
    S = np.asarray(S, dtype=float)
    off = np.abs(S[~np.eye(S.shape[0], dtype=bool)])
    lam_max = float(off.max()) if off.size else 0.0
    if lam_max <= 0:
        raise ValidationError("S has no non-zero off-diagonal entry; the path is empty")
    return lam_max * ratio ** (np.arange(n_points) / (n_points - 1))


def solve_path(S, path: Sequence[float], solver: SolverConfig = SolverConfig()):
    """Solve along ``path`` (any order), warm-starting from the previous penalty."""
    order = np.argsort(-np.asarray(path, dtype=float), kind="stable")
    out = [None] * len(path)
    prev = None
    for i in order:
        prev = graphical_lasso(S, float(path[i]), solver.tol, solver.max_iter,
                               solver.inner_tol, solver.inner_max_iter, warm_start=prev)
        out[i] = prev
    return out


def ebic(estimate: PrecisionEstimate, S, n: int, gamma: float = 0.5, zero_tol: float = 1e-6) -> float:
    p = S.shape[0]
    n_edges = len(edge_set(estimate, zero_tol))
    _, logdet = np.linalg.slogdet(estimate.theta)
    loglik = logdet - np.sum(estimate.theta * S)
    return float(-n * loglik + n_edges * np.log(n) + 4.0 * gamma * n_edges * np.log(p))


def ebic_select(S, n: int, path: Sequence[float], gamma: float = 0.5,
                solver: SolverConfig = SolverConfig()):
    """Penalty on ``path`` minimising the extended BIC; ties go to the larger penalty."""
    if len(path) == 0:
        raise ValidationError("empty penalty path")
    S = _check_input(S)
    fits = solve_path(S, path, solver)
    scores = np.array([ebic(f, S, n, gamma) for f in fits])
    order = np.argsort(-np.asarray(path, dtype=float), kind="stable")
    best = order[np.argmin(scores[order])]
    return float(path[best]), fits[best]


def stars_instability(selected: np.ndarray) -> np.ndarray:
    """Total instability per penalty.

    ``selected`` has shape (n_subsamples, n_penalties, n_pairs) of 0/1
    indicators; returns the mean over pairs of ``2 xi (1 - xi)`` where
    ``xi`` is the selection frequency.
    """
    xi = np.asarray(selected, dtype=float).mean(axis=0)
    return (2.0 * xi * (1.0 - xi)).mean(axis=1)


def stars_choose(instability: np.ndarray, beta: float) -> int:
    """Index of the densest penalty whose monotonised instability is <= beta.

    ``instability`` is ordered from the sparsest to the densest penalty.
    """
    mono = np.maximum.accumulate(np.asarray(instability, dtype=float))
    ok = np.flatnonzero(mono <= beta)
    return int(ok[-1]) if ok.size else 0


def stars_select(estimator: Callable[[np.ndarray], np.ndarray], n: int, path: Sequence[float],
                 subsamples: int = 20, beta: float = 0.05, rng=None,
                 solver: SolverConfig = SolverConfig(), zero_tol: float = 1e-6, S_full=None):
    """Stability-based penalty selection.

    Parameters
    ----------
    estimator : callable
        Maps an array of row indices to an input covariance for the solver.
    n : int
        Number of available rows.
    path : sequence of float
        Candidate penalties.
    subsamples : int
        Number of subsamples, each of size ``floor(10 sqrt(n))`` drawn
        without replacement.
    S_full : array, optional
        ``estimator(arange(n))`` if the caller already has it.

    Returns
    -------
    (lam, PrecisionEstimate)
        The selected penalty and the fit on all ``n`` rows.
    """
    if subsamples < 2:
        raise ValidationError("StARS needs at least 2 subsamples")
    size = int(np.floor(10.0 * np.sqrt(n)))
    if size >= n:
        raise ValidationError(f"subsample size {size} must be below n = {n}")
    if len(path) == 0:
        raise ValidationError("empty penalty path")
    rng = np.random.default_rng(rng)
    lams = np.sort(np.asarray(path, dtype=float))[::-1]

    iu = None
    selected = []
    for _ in range(subsamples):
        idx = np.sort(rng.choice(n, size=size, replace=False))
        S_b = estimator(idx)
        if iu is None:
            iu = np.triu_indices(S_b.shape[0], k=1)
        fits = solve_path(S_b, lams, solver)
        selected.append([np.abs(f.theta[iu]) > zero_tol for f in fits])
    inst = stars_instability(np.array(selected))
    lam = float(lams[stars_choose(inst, beta)])
    if S_full is None:
        S_full = estimator(np.arange(n))
    full = graphical_lasso(S_full, lam, solver.tol, solver.max_iter,
                           solver.inner_tol, solver.inner_max_iter)
    return lam, full
