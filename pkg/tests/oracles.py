"""Independent reference implementations used to check the library.

These are deliberately naive (explicit loops, direct sums, exhaustive
search) and share no code with the package.
"""
from __future__ import annotations

import cmath
import itertools
import math

import numpy as np


def catmull_rom(x: float) -> float:
    x = abs(x)
    a = -0.5
    if x < 1:
        return (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1
    if x < 2:
        return a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a
    return 0.0


def resample_1d(values, n_out: int, antialias: bool = False):
    """Direct convolution sum of Catmull-Rom taps with clamped edges."""
    n_in = len(values)
    ratio = n_in / n_out
    stretch = ratio if (antialias and n_out < n_in) else 1.0
    out = []
    for dst in range(n_out):
        center = (dst + 0.5) * ratio - 0.5
        acc = 0.0
        norm = 0.0
        i = math.floor(center - 2 * stretch)
        while i <= center + 2 * stretch:
            w = catmull_rom((i - center) / stretch)
            acc += w * values[min(max(i, 0), n_in - 1)]
            norm += w
            i += 1
        out.append(min(max(acc / norm, 0.0), 1.0))
    return out


def phase_profile(r: float, warp: float) -> float:
    wr = warp * r
    return wr * math.atan(wr) - 0.5 * math.log(1 + wr * wr)


def pst_direct(img, strength, warp, lp_sigma):
    """PST by explicit O(N^4) DFT sums with the kernel built point by point."""
    h, w = len(img), len(img[0])

    def freq(k, n):
        return (k if k < (n + 1) // 2 else k - n) / n

    rmax = max(math.hypot(freq(u, w), freq(v, h)) for u in range(w) for v in range(h))
    gmax = phase_profile(rmax, warp)
    kern = {}
    for v in range(h):
        for u in range(w):
            r = math.hypot(freq(u, w), freq(v, h))
            phi = strength * phase_profile(r, warp) / gmax if gmax > 0 else 0.0
            gain = math.exp(-r * r / (2 * (lp_sigma * rmax) ** 2))
            kern[v, u] = gain * cmath.exp(-1j * phi)

    spectrum = {}
    for v in range(h):
        for u in range(w):
            acc = 0j
            for y in range(h):
                for x in range(w):
                    acc += img[y][x] * cmath.exp(-2j * math.pi * (u * x / w + v * y / h))
            spectrum[v, u] = acc * kern[v, u]

    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0j
            for v in range(h):
                for u in range(w):
                    acc += spectrum[v, u] * cmath.exp(2j * math.pi * (u * x / w + v * y / h))
            acc /= w * h
            out[y, x] = math.atan2(acc.imag, acc.real)
    return out


def eig_sym_2x2(a, b, c):
    """Eigenpairs of [[a, b], [b, c]] via the characteristic polynomial, largest first."""
    tr = a + c
    # equals sqrt(tr^2/4 - det) without the cancellation of that form
    disc = math.hypot((a - c) / 2, b)
    l1, l2 = tr / 2 + disc, tr / 2 - disc
    if abs(b) > 1e-300:
        # two equivalent forms; the longer one avoids cancellation
        v1, v2 = (l1 - c, b), (b, l1 - a)
        vec = v1 if math.hypot(*v1) >= math.hypot(*v2) else v2
    elif a >= c:
        vec = (1.0, 0.0)
    else:
        vec = (0.0, 1.0)
    return l1, l2, vec


def gaussian_elimination(m, rhs):
    """Solve a square system by Gaussian elimination with partial pivoting."""
    a = [list(map(float, row)) + [float(r)] for row, r in zip(m, rhs)]
    n = len(a)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n + 1):
                    a[r][c] -= f * a[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (a[r][n] - sum(a[r][c] * x[c] for c in range(r + 1, n))) / a[r][r]
    return x


def stacked_least_squares(a, b):
    """Least-squares solution from the augmented system [[I, A], [A^T, 0]] [r; h] = [b; 0]."""
    a = np.asarray(a, dtype=float)
    m, d = a.shape
    big = np.zeros((m + d, m + d))
    big[:m, :m] = np.eye(m)
    big[:m, m:] = a
    big[m:, :m] = a.T
    rhs = np.concatenate([np.asarray(b, dtype=float), np.zeros(d)])
    sol = gaussian_elimination(big.tolist(), rhs.tolist())
    return np.array(sol[m:])


def best_two_partition_sse(points):
    """Minimum SSE over every split of ``points`` into two non-empty groups."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    best = (math.inf, None)
    for mask in itertools.product([0, 1], repeat=n - 1):
        labels = np.array((0,) + mask)
        if labels.min() == labels.max():
            continue
        sse = 0.0
        for g in (0, 1):
            grp = pts[labels == g]
            sse += float(((grp - grp.mean(axis=0)) ** 2).sum())
        if sse < best[0]:
            best = (sse, labels)
    return best


def linear_scan(f, centroids):
    """Nearest centroid by explicit loop; strict < keeps the lowest index on ties."""
    best, arg = math.inf, -1
    for q, c in enumerate(centroids):
        d = sum((fi - ci) ** 2 for fi, ci in zip(f, c))
        if d < best:
            best, arg = d, q
    return arg
