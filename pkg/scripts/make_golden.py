"""Write the reference dataset and its golden covariance estimate.

The golden matrix comes from a deliberately naive implementation: a
per-row loop over the log-likelihood, scipy's multivariate normal CDF for
the doubly-censored term and bounded Brent minimisation started from a
coarse grid. It shares no numerical code with the package.

    python scripts/make_golden.py [--out tests/data]
"""
import argparse
from pathlib import Path

import numpy as np
from scipy import optimize, stats

P, N, SEED = 4, 300, 20240501
LOWER = np.array([-0.5, -1.0, -0.8, -1.2])
UPPER = np.array([2.0, 1.5, 1.0, 0.6])
SIGMA_TRUE = np.array([[1.0, 0.5, 0.25, 0.0],
                       [0.5, 1.0, -0.3, 0.2],
                       [0.25, -0.3, 1.0, 0.4],
                       [0.0, 0.2, 0.4, 1.0]])
DELTA = 1e-3


def rect(sigma, a1, b1, a2, b2):
    return stats.multivariate_normal.cdf([b1, b2], mean=[0, 0], cov=[[1, sigma], [sigma, 1]],
                                         lower_limit=[a1, a2], abseps=1e-12, releps=1e-12, maxpts=2_000_000)


def loglik(sigma, yj, yk, aj, bj, ak, bk):
    s = np.sqrt(1 - sigma ** 2)
    p_both_out = 1 - (stats.norm.cdf(bj) - stats.norm.cdf(aj)) - (stats.norm.cdf(bk) - stats.norm.cdf(ak)) \
        + rect(sigma, aj, bj, ak, bk)
    mvn = stats.multivariate_normal(mean=[0, 0], cov=[[1, sigma], [sigma, 1]])
    total = 0.0
    for u, v in zip(yj, yk):
        if u != 0 and v != 0:
            total += mvn.logpdf([u, v])
        elif u == 0 and v == 0:
            total += np.log(p_both_out)
        elif u == 0:
            inside = stats.norm.cdf((bj - sigma * v) / s) - stats.norm.cdf((aj - sigma * v) / s)
            total += stats.norm.logpdf(v) + np.log(1 - inside)
        else:
            inside = stats.norm.cdf((bk - sigma * u) / s) - stats.norm.cdf((ak - sigma * u) / s)
            total += stats.norm.logpdf(u) + np.log(1 - inside)
    return total


def fit_pair(yj, yk, aj, bj, ak, bk):
    f = lambda s: -loglik(s, yj, yk, aj, bj, ak, bk)
    grid = np.linspace(-1 + DELTA, 1 - DELTA, 41)
    i = int(np.argmin([f(s) for s in grid]))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, 40)]
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return res.x


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "data"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(SEED)
    x = rng.multivariate_normal(np.zeros(P), SIGMA_TRUE, size=N)
    y = np.where((x >= LOWER) & (x <= UPPER), x, 0.0)
    # the package reads back the 17-digit text, so fit on exactly that
    y = np.array([[float(f"{v:.17g}") for v in row] for row in y])

    sig = np.eye(P)
    for k in range(1, P):
        for j in range(k):
            # grid ends may give log(0) = -inf, which the minimiser simply avoids
            with np.errstate(divide="ignore"):
                sig[j, k] = sig[k, j] = fit_pair(y[:, j], y[:, k], LOWER[j], UPPER[j], LOWER[k], UPPER[k])
    assert np.linalg.eigvalsh(sig)[0] > 1e-3, "golden estimate needs no PSD repair"

    with open(out / "reference_data.csv", "w") as fh:
        fh.write(",".join(f"X{j + 1}" for j in range(P)) + "\n")
        for row in y:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    with open(out / "reference_scheme.csv", "w") as fh:
        fh.write("index,a,b\n")
        for j in range(P):
            fh.write(f"{j + 1},{LOWER[j]:.17g},{UPPER[j]:.17g}\n")
    with open(out / "golden_sigma.csv", "w") as fh:
        for row in sig:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(np.array2string(sig, precision=6))


if __name__ == "__main__":
    main()
