"""Structure-recovery metrics, the naive baseline and ground-truth diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .glasso import EdgeSet
from .pairlik import CovarianceEstimate, ZeroInflatedMatrix, all_pairs
from .simgen import GroundTruth

TRUE_EDGE = "true-edge"
SKIP_ONE = "skip-one"
OTHER_FALSE = "other-false"

MAX_DIAGNOSTIC_P = 60


@dataclass(frozen=True)
class DetectionReport:
    rates: dict  # (j, k) -> frequency
    labels: dict  # (j, k) -> label
    repetitions: int
    method: str

    def mean_rate(self, label: str = TRUE_EDGE, pairs=None) -> float:
        keys = [q for q in (pairs or self.rates) if self.labels[q] == label]
        return float(np.mean([self.rates[q] for q in keys])) if keys else float("nan")


def pair_labels(truth: GroundTruth, chain_labels: bool = False) -> dict:
    labels = {}
    for j, k in all_pairs(truth.p):
        if (j, k) in truth.edges:
            labels[(j, k)] = TRUE_EDGE
        elif chain_labels and k - j == 2:
            labels[(j, k)] = SKIP_ONE
        else:
            labels[(j, k)] = OTHER_FALSE
    return labels


def detection_rates(edge_sets: list[EdgeSet], truth: GroundTruth, chain_labels: bool = False,
                    method: str = "ours") -> DetectionReport:
    """Fraction of repetitions in which each potential edge was selected."""
    if not edge_sets:
        raise ValidationError("need at least one repetition")
    pairs = all_pairs(truth.p)
    counts = dict.fromkeys(pairs, 0)
    for es in edge_sets:
        for e in es.edges:
            counts[e] += 1
    r = len(edge_sets)
    return DetectionReport({q: counts[q] / r for q in pairs}, pair_labels(truth, chain_labels), r, method)


def baseline_covariance(data: ZeroInflatedMatrix) -> CovarianceEstimate:
    """Empirical correlation of the observed, zero-inflated columns."""
    y = np.asarray(data.values if isinstance(data, ZeroInflatedMatrix) else data, dtype=float)
    if y.shape[0] < 2:
        raise ValidationError("need at least two rows")
    cov = np.cov(y, rowvar=False)
    var = np.diag(cov)
    if np.any(var <= 0):
        raise ValidationError(f"zero-variance column(s): {np.flatnonzero(var <= 0).tolist()}")
    d = 1.0 / np.sqrt(var)
    corr = cov * d[:, None] * d[None, :]
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return CovarianceEstimate(corr, 0.0)


def _support(truth: GroundTruth):
    """Vectorised (row, col) index pairs in the support S and its complement."""
    p = truth.p
    if p > MAX_DIAGNOSTIC_P:
        raise ValidationError(f"diagnostics are limited to p <= {MAX_DIAGNOSTIC_P}")
    on = np.eye(p, dtype=bool)
    for j, k in truth.edges.edges:
        on[j, k] = on[k, j] = True
    rows, cols = np.nonzero(on)
    crow, ccol = np.nonzero(~on)
    return (rows, cols), (crow, ccol)


def _gamma_block(sigma, left, right):
    # entries of sigma (x) sigma indexed by vec positions (j, k) x (l, m)
    (j, k), (l, m) = left, right
    return sigma[np.ix_(j, l)] * sigma[np.ix_(k, m)]


def _gamma_ss_inverse(truth: GroundTruth, S_idx):
    g_ss = _gamma_block(truth.sigma_star, S_idx, S_idx)
    try:
        return np.linalg.inv(g_ss)
    except np.linalg.LinAlgError:
        raise NumericalError("Gamma_SS is singular") from None


def incoherence_alpha(truth: GroundTruth) -> float:
    """``1 - max_{e not in S} || Gamma_eS Gamma_SS^{-1} ||_1`` with Gamma = Sigma (x) Sigma.

    Values <= 0 mean the incoherence condition fails. The complement of the
    support may be empty, in which case the result is 1.
    """
    S_idx, C_idx = _support(truth)
    if C_idx[0].size == 0:
        return 1.0
    inv = _gamma_ss_inverse(truth, S_idx)
    g_cs = _gamma_block(truth.sigma_star, C_idx, S_idx)
    return float(1.0 - np.abs(g_cs @ inv).sum(axis=1).max())


@dataclass(frozen=True)
class TheoryConstants:
    d: int
    kappa_sigma: float
    kappa_gamma: float


def theory_constants(truth: GroundTruth) -> TheoryConstants:
    """Maximum degree, ``max row l1 norm of Sigma*`` and ``||Gamma_SS^{-1}||_inf``."""
    S_idx, _ = _support(truth)
    theta = truth.theta_star
    off = (np.abs(theta) > 0) & ~np.eye(truth.p, dtype=bool)
    inv = _gamma_ss_inverse(truth, S_idx)
    return TheoryConstants(
        d=int(off.sum(axis=1).max()),
        kappa_sigma=float(np.abs(truth.sigma_star).sum(axis=1).max()),
        kappa_gamma=float(np.abs(inv).sum(axis=1).max()),
    )
