"""Ground-truth graphs, latent Gaussian sampling and the truncation operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .glasso import EdgeSet, edge_set
from .pairlik import ZeroInflatedMatrix
from .truncdist import TruncationScheme

STRUCTURES = ("chain", "random", "hub")
MIN_EIGENVALUE = 0.1


@dataclass(frozen=True)
class GraphSpec:
    structure: str = "chain"
    p: int = 30
    edge_prob: float = 0.02
    groups: int = 4
    strength: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValidationError(f"unknown structure {self.structure!r}; expected one of {STRUCTURES}")
        if self.p < 2:
            raise ValidationError("p must be at least 2")
        if not 0.0 < self.edge_prob <= 1.0:
            raise ValidationError("edge_prob must lie in (0, 1]")
        if self.strength == 0:
            raise ValidationError("strength must be non-zero")
        if self.structure == "hub" and (self.groups < 1 or self.p % self.groups):
            raise ValidationError(f"groups={self.groups} does not divide p={self.p}")


@dataclass(frozen=True)
class GroundTruth:
    theta_star: np.ndarray
    sigma_star: np.ndarray
    edges: EdgeSet
    max_degree: int

    @property
    def p(self) -> int:
        return self.sigma_star.shape[0]


def adjacency(spec: GraphSpec) -> np.ndarray:
    p = spec.p
    A = np.zeros((p, p))
    if spec.structure == "chain":
        i = np.arange(p - 1)
        A[i, i + 1] = A[i + 1, i] = 1.0
    elif spec.structure == "random":
        rng = np.random.default_rng(spec.seed)
        upper = np.triu(rng.random((p, p)) < spec.edge_prob, k=1)
        A = (upper | upper.T).astype(float)
    else:
        size = p // spec.groups
        for g in range(spec.groups):
            hub = g * size
            A[hub, hub + 1:hub + size] = A[hub + 1:hub + size, hub] = 1.0
    return A


def to_correlation(m: np.ndarray) -> np.ndarray:
    d = 1.0 / np.sqrt(np.diag(m))
    out = m * d[:, None] * d[None, :]
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def make_ground_truth(spec: GraphSpec) -> GroundTruth:
    """Precision with the requested sparsity pattern and a unit-diagonal covariance.

    The raw precision is ``c I + strength * A`` with ``c`` chosen so that its
    smallest eigenvalue is ``MIN_EIGENVALUE``.
    """
    A = adjacency(spec)
    off = spec.strength * A
    c = MIN_EIGENVALUE - np.linalg.eigvalsh(off)[0]
    theta_raw = off + c * np.eye(spec.p)
    sigma = to_correlation(np.linalg.inv(theta_raw))
    theta = np.linalg.inv(sigma)
    theta = 0.5 * (theta + theta.T)
    # round-off from the double inversion would otherwise leave tiny non-edges
    theta[(A == 0) & ~np.eye(spec.p, dtype=bool)] = 0.0
    edges = edge_set(theta, 1e-12)
    deg = edges.degrees(spec.p)
    return GroundTruth(theta, sigma, edges, int(deg.max()) if deg.size else 0)


def sample_latent(truth: GroundTruth, n: int, seed) -> np.ndarray:
    """``n`` i.i.d. rows from N(0, sigma_star)."""
    if n < 1:
        raise ValidationError("n must be positive")
    try:
        L = np.linalg.cholesky(truth.sigma_star)
    except np.linalg.LinAlgError:
        raise NumericalError("sigma_star is not positive definite") from None
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, truth.p)) @ L.T


def truncate(latent: np.ndarray, scheme: TruncationScheme) -> ZeroInflatedMatrix:
    x = np.asarray(latent, dtype=float)
    if x.ndim != 2 or x.shape[1] != scheme.p:
        raise ValidationError(f"latent shape {x.shape} does not match p = {scheme.p}")
    inside = (x >= scheme.lower) & (x <= scheme.upper)
    return ZeroInflatedMatrix(np.where(inside, x, 0.0), scheme)


def make_scheme(kind: str, p: int, params: dict | None = None) -> TruncationScheme:
    """Build a truncation scheme.

    ``identical``: params ``a``, ``b`` (default -0.5, 2) shared by every variable.
    ``decreasing``: fixed ``a`` (default -1), upper points spaced linearly
    from ``b_hi`` (2) down to ``b_lo`` (0.5).
    ``custom``: explicit ``lower`` and ``upper`` vectors of length ``p``.
    """
    params = dict(params or {})
    if kind == "identical":
        a, b = params.get("a", -0.5), params.get("b", 2.0)
        return TruncationScheme(np.full(p, a, dtype=float), np.full(p, b, dtype=float))
    if kind == "decreasing":
        a = params.get("a", -1.0)
        upper = np.linspace(params.get("b_hi", 2.0), params.get("b_lo", 0.5), p)
        return TruncationScheme(np.full(p, a, dtype=float), upper)
    if kind == "custom":
        lower = np.asarray(params["lower"], dtype=float)
        upper = np.asarray(params["upper"], dtype=float)
        if lower.size != p or upper.size != p:
            raise ValidationError(f"custom scheme needs {p} lower and upper points")
        return TruncationScheme(lower, upper)
    raise ValidationError(f"unknown scheme kind {kind!r}")
