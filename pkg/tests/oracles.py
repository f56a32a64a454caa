"""Independent reference computations; none of them use package code."""
import numpy as np
from scipy.integrate import quad

HILL_MODES = 128


def hill_eigenvalue(V, p=0.0, a=1.0, b=0.0, K=HILL_MODES):
    """Principal eigenvalue of a phi'' + b phi' + V phi conjugated by e^{p x},
    on 2 pi-periodic functions, in a Fourier basis of 2K+1 modes.

    ``V`` maps k to the coefficient of e^{ikx} (so cos x is {1: .5, -1: .5}).
    """
    ks = np.arange(-K, K + 1)
    n = ks.size
    M = np.zeros((n, n), dtype=complex)
    sym = a * (1j * ks - p) ** 2 + b * (1j * ks - p)
    M[np.arange(n), np.arange(n)] += sym
    for q, v in V.items():
        idx = np.arange(n)
        j = idx - q
        ok = (j >= 0) & (j < n)
        M[idx[ok], j[ok]] += v
    w = np.linalg.eigvals(M)
    return float(w[np.argmax(w.real)].real)


def cos_potential(amp=1.0, const=0.0, k=1):
    V = {k: 0.5 * amp, -k: 0.5 * amp}
    V[0] = V.get(0, 0.0) + const
    return V


def periodic_mean(fn, period=2 * np.pi):
    val, _ = quad(fn, 0.0, period, limit=400, epsabs=1e-13, epsrel=1e-13)
    return val / period


def torus_mean_2d(fn, n=2048):
    """Midpoint rule on the 2-torus at fixed resolution."""
    t = 2 * np.pi * (np.arange(n) + 0.5) / n
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    return float(np.mean(fn(T1, T2)))


def dense_scan_min(fn, x_max=1e4, step=1e-3, chunk=1_000_000):
    lo = np.inf
    start = 0.0
    while start < x_max:
        x = start + step * np.arange(chunk)
        x = x[x <= x_max]
        lo = min(lo, float(fn(x).min()))
        start = x[-1] + step
    return lo
