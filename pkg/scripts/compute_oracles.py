"""Independent high-precision reference values frozen into the test-suite.

Uses mpmath quadrature of the bivariate normal density directly (no c.d.f.
closed forms) and dense mpmath linear algebra. Run once; paste the output.
"""
import mpmath as mp

mp.mp.dps = 30


def f(x, y, s):
    q = (x * x - 2 * s * x * y + y * y) / (2 * (1 - s * s))
    return mp.exp(-q) / (2 * mp.pi * mp.sqrt(1 - s * s))


def outside(a, b):
    return [[-mp.inf, a], [b, mp.inf]]


def phi01(s, yk, a, b):
    return sum(mp.quad(lambda x: f(x, yk, s), seg) for seg in outside(a, b))


def phi00(s, aj, bj, ak, bk):
    tot = 0
    for sx in outside(aj, bj):
        for sy in outside(ak, bk):
            tot += mp.quad(lambda x, y: f(x, y, s), sx, sy)
    return tot


def rect(s, xl, xh, yl, yh):
    return mp.quad(lambda x, y: f(x, y, s), [xl, xh], [yl, yh])


def incoherence(p, strength):
    A = mp.zeros(p, p)
    for i in range(p - 1):
        A[i, i + 1] = A[i + 1, i] = strength
    ev = min(mp.eigsy(A)[0])
    theta_raw = A + (mp.mpf("0.1") - ev) * mp.eye(p)
    cov = theta_raw ** -1
    sig = mp.matrix(p, p)
    for i in range(p):
        for j in range(p):
            sig[i, j] = cov[i, j] / mp.sqrt(cov[i, i] * cov[j, j])
    support = [(i, j) for i in range(p) for j in range(p) if i == j or abs(i - j) == 1]
    comp = [(i, j) for i in range(p) for j in range(p) if (i, j) not in support]
    g = lambda e, h: sig[e[0], h[0]] * sig[e[1], h[1]]
    gss = mp.matrix([[g(e, h) for h in support] for e in support])
    inv = gss ** -1
    worst = 0
    for e in comp:
        row = mp.matrix([[g(e, h) for h in support]]) * inv
        worst = max(worst, sum(abs(v) for v in row))
    kappa_sigma = max(sum(abs(sig[i, j]) for j in range(p)) for i in range(p))
    kappa_gamma = max(sum(abs(inv[i, j]) for j in range(inv.cols)) for i in range(inv.rows))
    return 1 - worst, kappa_sigma, kappa_gamma


if __name__ == "__main__":
    print("ndtr(1)", mp.ncdf(1))
    print("phi11(0.5,1,1)", f(1, 1, mp.mpf("0.5")))
    print("phi01(0.5,0.7;-0.5,2)", phi01(mp.mpf("0.5"), mp.mpf("0.7"), mp.mpf("-0.5"), 2))
    print("phi10(0.3,1.0;-1,1)", phi01(mp.mpf("0.3"), 1, -1, 1))
    print("phi00(0.5;(-0.5,2)^2)", phi00(mp.mpf("0.5"), mp.mpf("-0.5"), 2, mp.mpf("-0.5"), 2))
    print("rect(0.5;-0.5,2,-0.5,2)", rect(mp.mpf("0.5"), mp.mpf("-0.5"), 2, mp.mpf("-0.5"), 2))
    print("chain5 (alpha, kappa_sigma, kappa_gamma)", incoherence(5, mp.mpf("0.3")))
