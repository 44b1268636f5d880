"""Bivariate likelihood kernels for a centred, unit-variance Gaussian couple
observed through double truncation.

A coordinate falling outside its window ``[a, b]`` is reported as 0, so the
law of an observed couple splits into four pieces according to which
coordinates are censored:

* ``phi11`` -- both observed, the bivariate normal density;
* ``phi01`` -- first censored, second observed at ``y_k``;
* ``phi10`` -- first observed at ``y_j``, second censored;
* ``phi00`` -- both censored, a probability.

All kernels broadcast over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import DomainError, ValidationError

DELTA_MIN = 1e-4
"""Kernels reject correlations with ``|sigma| > 1 - DELTA_MIN``."""

RECT_ORDER = 24
RECT_PANEL_RIDGES = 4.0
RECT_MAX_PANELS = 512

_LOG_2PI = np.log(2.0 * np.pi)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(RECT_ORDER)


@dataclass(frozen=True)
class TruncationScheme:
    """Per-variable observation windows ``[lower[j], upper[j]]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ValidationError(
                f"lower has {lower.size} entries but upper has {upper.size}")
        if lower.size < 2:
            raise ValidationError("a truncation scheme needs p >= 2 variables")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValidationError("truncation points must be finite")
        bad = np.flatnonzero(lower >= upper)
        if bad.size:
            raise ValidationError(
                f"need a < b for every variable; violated at index {bad[0]}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def p(self) -> int:
        return self.lower.size

    def pair_bounds(self, j: int, k: int) -> "PairBounds":
        return PairBounds(self.lower[j], self.upper[j], self.lower[k], self.upper[k])

    def censoring_rates(self) -> np.ndarray:
        """Probability that each standard normal coordinate is censored."""
        return ndtr(self.lower) + ndtr(-self.upper)


@dataclass(frozen=True)
class PairBounds:
    a_j: float
    b_j: float
    a_k: float
    b_k: float

    def __post_init__(self):
        vals = (self.a_j, self.b_j, self.a_k, self.b_k)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError("pair bounds must be finite")
        if not (self.a_j < self.b_j and self.a_k < self.b_k):
            raise ValidationError(f"malformed pair bounds {vals}")

    def swapped(self) -> "PairBounds":
        return PairBounds(self.a_k, self.b_k, self.a_j, self.b_j)


def check_sigma(sigma, delta: float = DELTA_MIN) -> np.ndarray:
    s = np.asarray(sigma, dtype=float)
    if not np.all(np.abs(s) <= 1.0 - delta):
        raise DomainError(f"correlation must satisfy |sigma| <= {1.0 - delta}, got {sigma}")
    return s


def std_normal_cdf(x):
    """Standard normal c.d.f., accurate to a few ulp over the whole real line."""
    return ndtr(x)


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _cdf_diff(hi, lo):
    # F(hi) - F(lo) without cancellation in the upper tail
    flip = np.where(np.asarray(lo) > 0, -1.0, 1.0)
    return flip * (ndtr(flip * hi) - ndtr(flip * lo))


def _outside_mass(sigma, y, a, b):
    """log P(X not in [a, b] | Y = y) for a standard couple with correlation sigma."""
    s = np.sqrt(1.0 - sigma * sigma)
    u = (b - sigma * y) / s
    v = (a - sigma * y) / s
    mass = ndtr(-u) + ndtr(v)
    with np.errstate(divide="ignore"):
        out = np.log(mass)
    tiny = mass < 1e-250
    if np.any(tiny):
        u, v = np.broadcast_arrays(u, v)
        out = np.array(out, dtype=float)
        out[tiny] = np.logaddexp(log_ndtr(-u[tiny]), log_ndtr(v[tiny]))
    return out


def log_phi11(sigma, y_j, y_k):
    one_m = 1.0 - sigma * sigma
    q = (y_j * y_j - 2.0 * sigma * y_j * y_k + y_k * y_k) / (2.0 * one_m)
    return -_LOG_2PI - 0.5 * np.log(one_m) - q


def phi11(sigma, y_j, y_k):
    """Bivariate normal density with unit variances and correlation ``sigma``."""
    sigma = check_sigma(sigma)
    return np.exp(log_phi11(sigma, np.asarray(y_j, float), np.asarray(y_k, float)))


def log_phi01(sigma, y_k, a_j, b_j):
    y_k = np.asarray(y_k, dtype=float)
    return -0.5 * _LOG_2PI - 0.5 * y_k * y_k + _outside_mass(sigma, y_k, a_j, b_j)


def phi01(sigma, y_k, bounds: PairBounds):
    """Density of ``(0, y_k)``: first coordinate censored, second observed."""
    sigma = check_sigma(sigma)
    return np.exp(log_phi01(sigma, y_k, bounds.a_j, bounds.b_j))


def phi10(sigma, y_j, bounds: PairBounds):
    """Density of ``(y_j, 0)``: first coordinate observed, second censored."""
    sigma = check_sigma(sigma)
    return np.exp(log_phi01(sigma, y_j, bounds.a_k, bounds.b_k))


def _rect_prob(sigma, x_lo, x_hi, y_lo, y_hi):
    """Vectorised rectangle probability; all arguments broadcast to a common 1-D shape.

    Integrates the conditional form
    ``int_{x_lo}^{x_hi} pdf(x) [F((y_hi - s x)/r) - F((y_lo - s x)/r)] dx``
    with a composite Gauss-Legendre rule whose panels are no wider than
    ``RECT_PANEL_RIDGES * r``, the scale on which the integrand bends.
    """
    sigma, x_lo, x_hi, y_lo, y_hi = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (sigma, x_lo, x_hi, y_lo, y_hi)))
    r = np.sqrt(1.0 - sigma * sigma)
    panels = int(min(RECT_MAX_PANELS, max(1, np.ceil(np.max((x_hi - x_lo) / (RECT_PANEL_RIDGES * r))))))
    width = ((x_hi - x_lo) / panels)[:, None, None]
    mid = x_lo[:, None, None] + width * (np.arange(panels)[None, :, None] + 0.5)
    x = mid + 0.5 * width * _GL_NODES[None, None, :]
    s = sigma[:, None, None]
    rr = r[:, None, None]
    band = _cdf_diff((y_hi[:, None, None] - s * x) / rr, (y_lo[:, None, None] - s * x) / rr)
    vals = (std_normal_pdf(x) * band) @ _GL_WEIGHTS
    return 0.5 * width[:, 0, 0] * vals.sum(axis=1)


def bivariate_rectangle_prob(sigma, x_lo, x_hi, y_lo, y_hi) -> float:
    """P(x_lo <= X <= x_hi, y_lo <= Y <= y_hi) for a standard couple."""
    if not (x_lo < x_hi and y_lo < y_hi):
        raise DomainError(f"malformed rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]")
    check_sigma(sigma)
    return float(_rect_prob(sigma, x_lo, x_hi, y_lo, y_hi)[0])


def _phi00(sigma, a_j, b_j, a_k, b_k):
    p_j = _cdf_diff(b_j, a_j)
    p_k = _cdf_diff(b_k, a_k)
    return 1.0 - p_j - p_k + _rect_prob(sigma, a_j, b_j, a_k, b_k)


def phi00(sigma, bounds: PairBounds) -> float:
    """Probability that both coordinates fall outside their windows.

    Inclusion-exclusion: ``1 - P_j - P_k + P(both inside)``.
    """
    check_sigma(sigma)
    return float(_phi00(sigma, bounds.a_j, bounds.b_j, bounds.a_k, bounds.b_k)[0])


def _gl_panels(lo, hi, n_panels, order):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * t).ravel(), (half[:, None] * w).ravel()


def normalization_defect(sigma, bounds: PairBounds) -> float:
    """Distance from 1 of the total mass of the couple's law.

    The reference measure puts Dirac atoms at 0 for censored coordinates and
    Lebesgue measure on the windows. Each of the four pieces is integrated
    from its own kernel, so the result checks the kernels against each other.
    """
    sigma = float(check_sigma(sigma))
    r = np.sqrt(1.0 - sigma * sigma)
    # panels no wider than the ridge width of the density
    nj = int(min(600, max(4, np.ceil((bounds.b_j - bounds.a_j) / r))))
    nk = int(min(600, max(4, np.ceil((bounds.b_k - bounds.a_k) / r))))
    xj, wj = _gl_panels(bounds.a_j, bounds.b_j, nj, 12)
    xk, wk = _gl_panels(bounds.a_k, bounds.b_k, nk, 12)

    m00 = phi00(sigma, bounds)
    m01 = np.dot(wk, phi01(sigma, xk, bounds))
    m10 = np.dot(wj, phi10(sigma, xj, bounds))
    m11 = wj @ phi11(sigma, xj[:, None], xk[None, :]) @ wk
    return abs(m00 + m01 + m10 + m11 - 1.0)
