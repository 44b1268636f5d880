"""Reference implementations shared by the test modules."""
import numpy as np

from truncgraph.truncdist import PairBounds


def complement_quadrature(sigma, b: PairBounds, cutoff=9.0, order=10):
    """phi00 by 2-D tensor Gauss-Legendre of the density over the complement."""
    r = np.sqrt(1 - sigma ** 2)
    t, w = np.polynomial.legendre.leggauss(order)

    def rule(lo, hi):
        n = int(np.ceil((hi - lo) / min(0.5, r)))
        e = np.linspace(lo, hi, n + 1)
        h = np.diff(e) / 2
        m = (e[1:] + e[:-1]) / 2
        return (m[:, None] + h[:, None] * t).ravel(), (h[:, None] * w).ravel()

    total = 0.0
    for xs in (rule(-cutoff, b.a_j), rule(b.b_j, cutoff)):
        for ys in (rule(-cutoff, b.a_k), rule(b.b_k, cutoff)):
            x, y = xs[0][:, None], ys[0][None, :]
            dens = np.exp(-(x * x - 2 * sigma * x * y + y * y) / (2 * r * r)) / (2 * np.pi * r)
            total += xs[1] @ dens @ ys[1]
    return total
