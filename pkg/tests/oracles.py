"""Independent reference computations used to check the library.

Nothing here imports the code path it checks; these are slow, obvious
implementations.
"""

import itertools
import math

import numpy as np


def cofactor_det(A):
    A = [list(map(float, row)) for row in A]
    n = len(A)
    if n == 1:
        return A[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        total += (-1) ** j * A[0][j] * cofactor_det(minor)
    return total


def char_poly_by_interpolation(A):
    """Coefficients of det(lambda I - A) from n+1 cofactor determinants."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    lams = np.arange(n + 1, dtype=float) - n / 2.0
    vals = [cofactor_det(lam * np.eye(n) - A) for lam in lams]
    V = np.vander(lams, n + 1)
    return np.linalg.solve(V, vals)


def enumerate_windows(N, p, s):
    """Brute-force padding and window count: first q and all window starts."""
    q = 0
    while True:
        L = N + q
        if L >= p and (L - p) % s == 0:
            break
        q += 1
    starts = []
    start = 0
    while start + p <= N + q:
        starts.append(start)
        start += s
    return q, starts


def direct_dft_power(x):
    """Hann-windowed, mean-removed power by explicit sums, bins 0..T//2."""
    x = np.asarray(x, dtype=float)
    T = x.size
    n = np.arange(T)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * n / (T - 1))
    y = (x - x.mean()) * w
    out = np.empty(T // 2 + 1)
    for k in range(T // 2 + 1):
        ang = 2 * np.pi * k * n / T
        re = float(np.dot(y, np.cos(ang)))
        im = float(np.dot(y, np.sin(ang)))
        out[k] = (re * re + im * im) / (T * T)
    return out


def brute_nearest(points, theiler):
    """O(N^2) nearest neighbour outside the exclusion window."""
    n = points.shape[0]
    idx = np.empty(n, dtype=int)
    dist = np.empty(n)
    for i in range(n):
        d = np.sqrt(np.sum((points - points[i]) ** 2, axis=1))
        d[max(0, i - theiler):i + theiler + 1] = np.inf
        j = int(np.argmin(d))
        idx[i], dist[i] = j, d[j]
    return idx, dist


def finite_difference_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (f(x + e, 0.0) - f(x - e, 0.0)) / (2 * h)
    return J


def autocorrelation(x, lag):
    a = x[:-lag] - x[:-lag].mean()
    b = x[lag:] - x[lag:].mean()
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))


def quadratic_roots_max_real(c):
    """Largest real part among roots of lambda^2 + c1 lambda + c0."""
    _, b, c0 = c
    disc = b * b - 4 * c0
    if disc >= 0:
        return (-b + math.sqrt(disc)) / 2
    return -b / 2


def plugin_entropy(x, bins):
    counts = {}
    lo, hi = min(x), max(x)
    width = (hi - lo) / bins
    for v in x:
        k = min(int((v - lo) / width), bins - 1)
        counts[k] = counts.get(k, 0) + 1
    n = len(x)
    return -sum(c / n * math.log2(c / n) for c in counts.values())


def all_permutations(n):
    return itertools.permutations(range(n))
