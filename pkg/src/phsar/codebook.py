"""Anchor points over feature space: seeded k-means and nearest-anchor lookup."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

DEFAULT_CLUSTERS = 64
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6

_MASK64 = (1 << 64) - 1


class XorShift64Star:
    """xorshift64* generator (Vigna 2014); deterministic across platforms."""

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        # splitmix64 scramble so small seeds (0, 1, ...) give unrelated streams
        z = (int(seed) + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
        self.state = z or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULTIPLIER) & _MASK64

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True, eq=False)
class Codebook:
    k: int
    centroids: np.ndarray
    seed: int

    def __post_init__(self):
        c = np.ascontiguousarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != self.k:
            raise ValueError(f"expected {self.k} centroids, got array of shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)


def assign(features, cb_or_centroids, threads: int = 1) -> np.ndarray:
    """Nearest-centroid index for every row of ``features``."""
    centroids = getattr(cb_or_centroids, "centroids", cb_or_centroids)
    feats = np.ascontiguousarray(features, dtype=np.float64)
    return _backend.kernels.assign(feats, np.ascontiguousarray(centroids), threads)


def nearest_centroid(f, cb: Codebook) -> int:
    """Index of the centroid closest to ``f``; ties go to the lowest index."""
    f = np.asarray(f, dtype=np.float64).reshape(1, -1)
    return int(assign(f, cb)[0])


def _point_sq_dist(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    out = np.zeros(points.shape[0])
    for c in range(points.shape[1]):
        out += diff[:, c] * diff[:, c]
    return out


def kmeans_pp_init(x: np.ndarray, k: int, rng: XorShift64Star) -> np.ndarray:
    """k-means++ seeding: first centre uniform, then D^2-weighted draws."""
    n = x.shape[0]
    chosen = [min(int(rng.uniform() * n), n - 1)]
    d2 = _point_sq_dist(x, x[chosen[0]])
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all remaining points coincide with a centre
            idx = min(int(rng.uniform() * n), n - 1)
        else:
            cdf = np.cumsum(d2)
            target = rng.uniform() * cdf[-1]
            idx = int(np.searchsorted(cdf, target, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        np.minimum(d2, _point_sq_dist(x, x[idx]), out=d2)
    return x[chosen].copy()


def _means(x: np.ndarray, labels: np.ndarray, k: int):
    counts = np.bincount(labels, minlength=k)
    sums = np.empty((k, x.shape[1]))
    for c in range(x.shape[1]):
        sums[:, c] = np.bincount(labels, weights=x[:, c], minlength=k)
    return sums, counts


def kmeans_fit(
    features,
    k: int = DEFAULT_CLUSTERS,
    seed: int = 0,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
    sse_trace: list | None = None,
) -> Codebook:
    """Lloyd's k-means with k-means++ seeding from a seeded xorshift64* stream.

    Empty clusters are reseeded with the point farthest from its assigned
    centroid. Iteration stops once no centroid moves by more than ``tol``
    (L2) or after ``max_iter`` rounds. When ``sse_trace`` is given, the
    within-cluster sum of squares after every assignment step is appended.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("k-means needs a non-empty 2-D feature array")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")

    rng = XorShift64Star(seed)
    centroids = kmeans_pp_init(x, k, rng)
    kern = _backend.kernels

    for _ in range(max_iter):
        labels = kern.assign(x, centroids, threads)
        dist = _point_sq_dist(x, centroids[labels])
        if sse_trace is not None:
            sse_trace.append(float(dist.sum()))
        sums, counts = _means(x, labels, k)
        new = centroids.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            order = np.argsort(-dist, kind="stable")
            for q, idx in zip(empty, order):
                new[q] = x[idx]
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift <= tol:
            break
    return Codebook(int(k), centroids, int(seed))
