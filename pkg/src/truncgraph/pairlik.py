"""Pairwise truncated-likelihood estimation of the latent correlation matrix.

Each off-diagonal entry is estimated on its own by maximising the
log-likelihood of the observed couple ``(Y_j, Y_k)`` over
``[-1 + delta, 1 - delta]``. The sample is reduced to four buckets by the
zero pattern of the two columns; the fully observed bucket enters only
through three sums of products.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import truncdist as td
from .errors import DegenerateDataWarning, ValidationError
from .truncdist import PairBounds, TruncationScheme

_LOG_2PI = math.log(2.0 * math.pi)
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

FLAG_DEGENERATE = "degenerate"
FLAG_TIE = "tie"


@dataclass(frozen=True)
class EstimatorConfig:
    delta: float = 1e-3
    grid: int = 41
    tol_sigma: float = 1e-6
    eps_psd: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0 or self.delta < td.DELTA_MIN:
            raise ValidationError(f"delta must lie in [{td.DELTA_MIN}, 1), got {self.delta}")
        if self.grid < 3:
            raise ValidationError("grid needs at least 3 points")
        if self.tol_sigma <= 0 or self.eps_psd <= 0:
            raise ValidationError("tol_sigma and eps_psd must be positive")


@dataclass(frozen=True)
class ZeroInflatedMatrix:
    """Observed n x p sample; a literal 0 marks a censored entry."""

    values: np.ndarray
    scheme: TruncationScheme

    def __post_init__(self):
        y = np.array(self.values, dtype=float)
        if y.ndim != 2:
            raise ValidationError("data must be a 2-D array")
        n, p = y.shape
        if n < 2 or p < 2:
            raise ValidationError(f"need n >= 2 and p >= 2, got {y.shape}")
        if p != self.scheme.p:
            raise ValidationError(f"data has {p} columns but the scheme has {self.scheme.p}")
        if not np.all(np.isfinite(y)):
            raise ValidationError("data contains non-finite entries")
        nz = y != 0
        bad = nz & ((y < self.scheme.lower) | (y > self.scheme.upper))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(
                f"value {y[i, j]} at row {i}, column {j} lies outside "
                f"[{self.scheme.lower[j]}, {self.scheme.upper[j]}]")
        y.setflags(write=False)
        object.__setattr__(self, "values", y)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def rows(self, idx) -> "ZeroInflatedMatrix":
        return ZeroInflatedMatrix(self.values[idx], self.scheme)


@dataclass(frozen=True)
class PairBuckets:
    n00: int
    n01: int
    n10: int
    n11: int
    s_jj: float
    s_kk: float
    s_jk: float
    obs01: np.ndarray  # y_k where y_j is censored
    obs10: np.ndarray  # y_j where y_k is censored

    @property
    def n(self) -> int:
        return self.n00 + self.n01 + self.n10 + self.n11

    @property
    def informative(self) -> bool:
        return self.n01 + self.n10 + self.n11 > 0


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    delta: float
    flags: dict = field(default_factory=dict)  # (j, k) -> flag string

    @property
    def p(self) -> int:
        return self.matrix.shape[0]


def bucketize(data: ZeroInflatedMatrix, j: int, k: int) -> PairBuckets:
    p = data.p
    if j == k or not (0 <= j < p and 0 <= k < p):
        raise IndexError(f"invalid pair ({j}, {k}) for p = {p}")
    y_j = data.values[:, j]
    y_k = data.values[:, k]
    o_j = y_j != 0
    o_k = y_k != 0
    both = o_j & o_k
    a, b = y_j[both], y_k[both]
    return PairBuckets(
        n00=int(np.count_nonzero(~o_j & ~o_k)),
        n01=int(np.count_nonzero(~o_j & o_k)),
        n10=int(np.count_nonzero(o_j & ~o_k)),
        n11=int(np.count_nonzero(both)),
        s_jj=float(np.dot(a, a)),
        s_kk=float(np.dot(b, b)),
        s_jk=float(np.dot(a, b)),
        obs01=y_k[~o_j & o_k].copy(),
        obs10=y_j[o_j & ~o_k].copy(),
    )


def _log_phi01(sigma, y, a, b):
    return -0.5 * _LOG_2PI - 0.5 * y * y + td._outside_mass(sigma, y, a, b)


def _log_phi11_sum(sigma, n11, s_jj, s_kk, s_jk):
    one_m = 1.0 - sigma * sigma
    return (-n11 * _LOG_2PI - 0.5 * n11 * np.log(one_m)
            - (s_jj - 2.0 * sigma * s_jk + s_kk) / (2.0 * one_m))


class _PairBatch:
    """Several pairs' buckets flattened so one call evaluates every objective."""

    def __init__(self, buckets: list[PairBuckets], bounds: list[PairBounds]):
        m = len(buckets)
        self.m = m
        self.aj = np.array([b.a_j for b in bounds])
        self.bj = np.array([b.b_j for b in bounds])
        self.ak = np.array([b.a_k for b in bounds])
        self.bk = np.array([b.b_k for b in bounds])
        self.n00 = np.array([b.n00 for b in buckets], dtype=float)
        self.n11 = np.array([b.n11 for b in buckets], dtype=float)
        self.s_jj = np.array([b.s_jj for b in buckets])
        self.s_kk = np.array([b.s_kk for b in buckets])
        self.s_jk = np.array([b.s_jk for b in buckets])
        self.informative = np.array([b.informative for b in buckets], dtype=bool)

        self.id01 = np.repeat(np.arange(m), [b.n01 for b in buckets])
        self.v01 = np.concatenate([b.obs01 for b in buckets]) if m else np.empty(0)
        self.id10 = np.repeat(np.arange(m), [b.n10 for b in buckets])
        self.v10 = np.concatenate([b.obs10 for b in buckets]) if m else np.empty(0)
        self.has00 = self.n00 > 0

    def loglik(self, sigma: np.ndarray) -> np.ndarray:
        """Log-likelihood of every pair, pair q evaluated at ``sigma[q]``."""
        out = _log_phi11_sum(sigma, self.n11, self.s_jj, self.s_kk, self.s_jk)
        if self.has00.any():
            p00 = td._phi00(sigma, self.aj, self.bj, self.ak, self.bk)
            out = out + np.where(self.has00, self.n00 * np.log(np.maximum(p00, 1e-300)), 0.0)
        if self.v01.size:
            i = self.id01
            terms = _log_phi01(sigma[i], self.v01, self.aj[i], self.bj[i])
            out = out + np.bincount(i, weights=terms, minlength=self.m)
        if self.v10.size:
            i = self.id10
            terms = _log_phi01(sigma[i], self.v10, self.ak[i], self.bk[i])
            out = out + np.bincount(i, weights=terms, minlength=self.m)
        return out


def pair_loglik(sigma, buckets: PairBuckets, bounds: PairBounds, delta: float = 1e-3):
    """Log-likelihood of one pair's sample at correlation ``sigma``.

    Accepts a scalar or an array of correlations.
    """
    sig = td.check_sigma(sigma, delta)
    flat = np.atleast_1d(sig).ravel()
    batch = _PairBatch([buckets] * flat.size, [bounds] * flat.size)
    out = batch.loglik(flat).reshape(np.shape(sig))
    return float(out) if out.ndim == 0 else out


def _fit_batch(batch: _PairBatch, config: EstimatorConfig):
    """Grid search followed by lock-step golden-section refinement."""
    lo, hi = -1.0 + config.delta, 1.0 - config.delta
    # exactly antisymmetric grid, so reflecting a variable reflects the search
    half = (config.grid - 1) / 2.0
    grid = np.clip((np.arange(config.grid) - half) * (hi / half), lo, hi)
    m = batch.m
    values = np.empty((m, grid.size))
    for g, s in enumerate(grid):
        values[:, g] = batch.loglik(np.full(m, s))

    # ties resolved towards the smaller |sigma|
    order = np.argsort(np.abs(grid), kind="stable")
    best = order[np.argmax(values[:, order], axis=1)]
    best_val = values[np.arange(m), best]

    left = grid[np.maximum(best - 1, 0)]
    right = grid[np.minimum(best + 1, grid.size - 1)]
    width = float(np.max(right - left)) if m else 0.0
    n_iter = max(1, math.ceil(math.log(config.tol_sigma / width) / math.log(_INV_GOLDEN))) if width > 0 else 0

    a, b = left.copy(), right.copy()
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = batch.loglik(c), batch.loglik(d)
    for _ in range(n_iter):
        keep_left = fc >= fd
        # maximum lies in [a, d] when f(c) >= f(d), else in [c, b]
        b = np.where(keep_left, d, b)
        a = np.where(keep_left, a, c)
        new_c = np.where(keep_left, b - _INV_GOLDEN * (b - a), d)
        new_d = np.where(keep_left, c, a + _INV_GOLDEN * (b - a))
        f_new = batch.loglik(np.where(keep_left, new_c, new_d))
        fc, fd = np.where(keep_left, f_new, fd), np.where(keep_left, fc, f_new)
        c, d = new_c, new_d
    x = 0.5 * (a + b)
    fx = batch.loglik(x)
    sigma = np.where(fx >= best_val, x, grid[best])

    flags = np.full(m, "", dtype=object)
    scale = 1e-9 * (1.0 + np.abs(best_val))
    for q in range(m):
        row = values[q]
        peaks = [g for g in range(grid.size)
                 if (g == 0 or row[g] >= row[g - 1]) and (g == grid.size - 1 or row[g] >= row[g + 1])]
        rivals = [g for g in peaks if abs(g - best[q]) > 1 and best_val[q] - row[g] <= scale[q]]
        if rivals:
            flags[q] = FLAG_TIE
    sigma = np.where(batch.informative, sigma, 0.0)
    flags[~batch.informative] = FLAG_DEGENERATE
    return sigma, flags


def fit_pairs(buckets: list[PairBuckets], bounds: list[PairBounds],
              config: EstimatorConfig = EstimatorConfig()):
    """Estimate several pairs at once; returns (sigmas, flags)."""
    if not buckets:
        return np.empty(0), np.empty(0, dtype=object)
    return _fit_batch(_PairBatch(buckets, bounds), config)


def estimate_pair_sigma(buckets: PairBuckets, bounds: PairBounds,
                        config: EstimatorConfig = EstimatorConfig()) -> float:
    """Maximum-likelihood correlation of a single pair.

    Returns 0.0 and emits :class:`DegenerateDataWarning` when every
    observation of the pair is doubly censored.
    """
    if buckets.n == 0:
        raise ValidationError("empty pair sample")
    sigma, flags = fit_pairs([buckets], [bounds], config)
    if flags[0] == FLAG_DEGENERATE:
        warnings.warn("pair has no observed coordinate; returning 0", DegenerateDataWarning)
    return float(sigma[0])


def all_pairs(p: int) -> list[tuple[int, int]]:
    return [(j, k) for k in range(1, p) for j in range(k)]


def estimate_covariance(data: ZeroInflatedMatrix, config: EstimatorConfig = EstimatorConfig()
                        ) -> CovarianceEstimate:
    """Unit-diagonal matrix of pairwise likelihood estimates.

    Pairs do not interact, so entry (j, k) is exactly what
    :func:`estimate_pair_sigma` returns for that pair.
    """
    pairs = all_pairs(data.p)
    buckets = [bucketize(data, j, k) for j, k in pairs]
    bounds = [data.scheme.pair_bounds(j, k) for j, k in pairs]
    sigmas, flags = fit_pairs(buckets, bounds, config)
    mat = np.eye(data.p)
    report = {}
    for (j, k), s, f in zip(pairs, sigmas, flags):
        mat[j, k] = mat[k, j] = s
        if f:
            report[(j, k)] = f
    return CovarianceEstimate(mat, config.delta, report)


def psd_repair(estimate: CovarianceEstimate, eps: float = 1e-3) -> CovarianceEstimate:
    """Project onto unit-diagonal matrices with smallest eigenvalue >= eps.

    Eigenvalues below ``eps`` are clipped, the result is rescaled to a unit
    diagonal and, if rescaling pulled the spectrum below ``eps`` again,
    shrunk towards the identity by the minimal amount. Inputs that already
    satisfy the bound are returned unchanged.
    """
    m = np.array(estimate.matrix, dtype=float)
    m = 0.5 * (m + m.T)
    evals, evecs = np.linalg.eigh(m)
    if evals[0] >= eps and np.allclose(np.diag(m), 1.0, rtol=0, atol=1e-12):
        return CovarianceEstimate(np.array(estimate.matrix, dtype=float), estimate.delta,
                                  dict(estimate.flags))
    clipped = (evecs * np.maximum(evals, eps)) @ evecs.T
    d = 1.0 / np.sqrt(np.diag(clipped))
    out = clipped * d[:, None] * d[None, :]
    out = 0.5 * (out + out.T)
    mu = np.linalg.eigvalsh(out)[0]
    if mu < eps:
        t = (eps - mu) / (1.0 - mu)
        out = (1.0 - t) * out + t * np.eye(out.shape[0])
    np.fill_diagonal(out, 1.0)
    return CovarianceEstimate(out, estimate.delta, dict(estimate.flags))
