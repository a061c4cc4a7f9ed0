"""Independent reference values for the test suite.

Run with `python3 tests/oracles/oracles.py`; the printed numbers are frozen into
tests/golden.hpp. Nothing here imports the C++ code.
"""
import json
import math

import numpy as np
from scipy import linalg, optimize, stats


def mathieu_fd(n, theta):
    """Central-difference 0.5 d^2/dx^2 + theta cos(2 pi x) + theta^2 / 2 on n points."""
    h = 1.0 / n
    x = np.arange(n) * h
    a = np.zeros((n, n), dtype=complex if np.iscomplexobj(theta) else float)
    idx = np.arange(n)
    a[idx, (idx + 1) % n] += 0.5 / h**2
    a[idx, (idx - 1) % n] += 0.5 / h**2
    a[idx, idx] += -1.0 / h**2 + theta * np.cos(2 * np.pi * x) + 0.5 * theta**2
    return a


def mathieu_fourier(theta, kmax=40):
    """Same operator in the Fourier basis (continuum limit)."""
    k = np.arange(-kmax, kmax + 1)
    m = np.diag(-2 * np.pi**2 * k**2 + 0.5 * theta**2)
    m += np.diag(np.full(2 * kmax, 0.5 * theta), 1) + np.diag(np.full(2 * kmax, 0.5 * theta), -1)
    return np.linalg.eigvalsh(m)[-1]


def top(a):
    w, v = np.linalg.eigh(a)
    return w, v


def mu_d1_d2(n, theta):
    """mu, mu' (Hellmann-Feynman) and mu'' (second-order perturbation) for the symmetric FD matrix."""
    w, v = top(mathieu_fd(n, theta))
    x = np.arange(n) / n
    db = np.cos(2 * np.pi * x) + theta
    g = v[:, -1]
    d1 = g @ (db * g)
    coupling = v[:, :-1].T @ (db * g)
    d2 = 1.0 + 2.0 * np.sum(coupling**2 / (w[-1] - w[:-1]))
    return w[-1], d1, d2, g


def mathieu_d0(n, a):
    theta = optimize.brentq(lambda th: mu_d1_d2(n, th)[1] - a, 1e-6, 5.0, xtol=1e-14)
    mu, _, d2, g = mu_d1_d2(n, theta)
    # Normalisation of the library: max|g| = 1, sum psi g = 1 (psi = g / |g|^2 for a symmetric matrix).
    g = g / g[np.argmax(np.abs(g))]
    psi = g / (g @ g)
    i_rate = a * theta - mu
    d0 = g[0] * psi.sum() * math.sqrt(1.0 / d2) / (theta * math.sqrt(2 * math.pi))
    return theta, i_rate, 1.0 / d2, d0


def mathieu_tail(n, a, t, theta, ds=0.01, s_max=4.0):
    """Bromwich integral of E[e^{z S_t}] e^{-z a t} / z along Re z = theta, trapezoid rule."""
    c = a * t
    total = 0.0
    s_list = np.arange(0.0, s_max + ds / 2, ds)
    for s in s_list:
        z = theta + 1j * s
        u = linalg.expm(t * mathieu_fd(n, z))
        mgf = u[0, :].sum()
        val = (mgf * np.exp(-z * c) / z).real
        total += val * (0.5 if s == 0.0 else 1.0)
    return total * ds / math.pi


def main():
    out = {}
    out["mathieu_mu_n256"] = {str(th): mu_d1_d2(256, th)[0] for th in (0.25, 0.5, 1.0, 2.0)}
    out["mathieu_mu_continuum"] = {str(th): mathieu_fourier(th) for th in (0.25, 0.5, 1.0, 2.0)}
    out["mathieu_d2_n256"] = {str(th): mu_d1_d2(256, th)[2] for th in (0.0, 0.5, 1.0)}
    theta, i_rate, i2, d0 = mathieu_d0(256, 0.3)
    out["mathieu_a03"] = {"theta_a": theta, "I": i_rate, "Isecond": i2, "D0": d0}
    out["mathieu_grid_doubling"] = {
        str(th): abs(mu_d1_d2(512, th)[0] - mu_d1_d2(256, th)[0]) for th in (0.0, 0.5, 1.0, theta)
    }
    out["mathieu_tail_a03_t30"] = mathieu_tail(256, 0.3, 30.0, theta)
    out["gaussian_tail_a1_t16"] = stats.norm.sf(4.0)
    out["gaussian_D"] = [(-1) ** k * float(np.prod(np.arange(1, 2 * k, 2))) / math.sqrt(2 * math.pi) for k in range(3)]
    # Fair +-1 walk: P(S_n >= a n) = P(Bin(n, 1/2) >= n (1 + a) / 2).
    chain = {}
    for n in (10, 20, 40):
        for a in (0.2, 0.6):
            k = math.ceil(n * (1 + a) / 2 - 1e-12)
            chain[f"{n}_{a}"] = stats.binom.sf(k - 1, n, 0.5)
    out["two_state_tail"] = chain
    # Naive MC on the Gaussian case: hits per path have probability p; 1e5 paths.
    p = stats.norm.sf(4.0)
    out["naive_zero_hit_prob_1e5"] = (1 - p) ** 100000
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
