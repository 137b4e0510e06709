"""Filter learning.

Training pairs come from a degradation pipeline: each HR image is shrunk
with antialiased bicubic, cheap-upscaled back to full size (the *base*
image), and every base patch is paired with the HR pixel at its centre.
Patches are bucketed by nearest anchor (and, optionally, by sub-pixel
phase), and each bucket gets the ridge-regularised least-squares filter
mapping its patches to their HR pixels.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from threadpoolctl import threadpool_limits

from . import _backend
from .codebook import Codebook, assign, kmeans_fit
from .errors import TrainingError
from .image import as_image, extract_patch, load_image, resize_bicubic
from .model import Model, TrainConfig, delta_filter
from .pst import apply_pst

log = logging.getLogger(__name__)

# Cholesky pivots below this fraction of the largest diagonal entry mark a
# bucket as numerically singular.
PIVOT_RTOL = 1e-12


@dataclass
class Prepared:
    """One HR training image run through the degradation pipeline."""

    hr: np.ndarray
    base: np.ndarray
    phase: np.ndarray | None

    @property
    def shape(self):
        return self.hr.shape


def degrade(hr: np.ndarray, scale: int):
    """Trim ``hr`` to a multiple of ``scale`` and return ``(hr, lr, base)``."""
    hr = as_image(hr)
    h = hr.shape[0] - hr.shape[0] % scale
    w = hr.shape[1] - hr.shape[1] % scale
    if h == 0 or w == 0:
        raise ValueError(f"image {hr.shape[1]}x{hr.shape[0]} smaller than scale {scale}")
    hr = hr[:h, :w]
    lr = resize_bicubic(hr, w // scale, h // scale, antialias=True)
    base = resize_bicubic(lr, w, h, antialias=False)
    return hr, lr, base


def prepare(hr, cfg: TrainConfig) -> Prepared | None:
    """Degrade one image; returns ``None`` (with a warning) if it is too small."""
    hr = as_image(hr)
    need = cfg.patch_size * cfg.scale
    h = hr.shape[0] - hr.shape[0] % cfg.scale
    w = hr.shape[1] - hr.shape[1] % cfg.scale
    if h < need or w < need:
        log.warning("skipping %dx%d image: needs at least %dx%d", hr.shape[1], hr.shape[0], need, need)
        return None
    hr, _, base = degrade(hr, cfg.scale)
    phase = apply_pst(base, cfg.pst_kernel(base.shape[1], base.shape[0])) if cfg.uses_pst else None
    return Prepared(hr, base, phase)


def valid_region(shape, patch_size: int):
    """(y0, y1, x0, x1) of centres at least ``patch_size // 2`` from every border."""
    r = patch_size // 2
    return r, shape[0] - r, r, shape[1] - r


def phase_classes(y0, y1, x0, x1, scale: int) -> np.ndarray:
    ys = np.arange(y0, y1) % scale
    xs = np.arange(x0, x1) % scale
    return (ys[:, None] * scale + xs[None, :]).ravel()


def bucket_index(clusters: np.ndarray, classes: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    if cfg.phase_stratify:
        return clusters * cfg.phases + classes
    return clusters


def image_features(prep: Prepared, cfg: TrainConfig, threads: int = 1) -> np.ndarray:
    y0, y1, x0, x1 = valid_region(prep.shape, cfg.patch_size)
    return _backend.kernels.patch_features(
        prep.base, prep.phase, cfg.patch_size, cfg.feature_weights, y0, y1, x0, x1, threads
    )


def image_buckets(prep: Prepared, cfg: TrainConfig, cb: Codebook, threads: int = 1) -> np.ndarray:
    y0, y1, x0, x1 = valid_region(prep.shape, cfg.patch_size)
    clusters = assign(image_features(prep, cfg, threads), cb, threads)
    return bucket_index(clusters, phase_classes(y0, y1, x0, x1, cfg.scale), cfg)


def harvest_pairs(hr, cfg: TrainConfig, cb: Codebook | None = None):
    """Yield ``(key, a, b)`` training pairs for one HR image.

    ``key`` is the bucket index when a codebook is given, otherwise the
    feature vector (first training pass). ``a`` is the base-image patch and
    ``b`` the HR pixel at its centre.
    """
    prep = prepare(hr, cfg)
    if prep is None:
        return
    y0, y1, x0, x1 = valid_region(prep.shape, cfg.patch_size)
    keys = image_features(prep, cfg) if cb is None else image_buckets(prep, cfg, cb)
    i = 0
    for y in range(y0, y1):
        for x in range(x0, x1):
            yield keys[i], extract_patch(prep.base, x, y, cfg.patch_size), float(prep.hr[y, x])
            i += 1


def patch_windows(img: np.ndarray, patch_size: int) -> np.ndarray:
    """``(H, W, p, p)`` read-only view of the edge-padded patch around every pixel."""
    r = patch_size // 2
    padded = np.pad(img, r, mode="edge")
    return np.lib.stride_tricks.sliding_window_view(padded, (patch_size, patch_size))


def patch_matrix(img: np.ndarray, patch_size: int, y0, y1, x0, x1) -> np.ndarray:
    """Rows of flattened patches for every centre in the region (row-major)."""
    win = patch_windows(img, patch_size)
    return win[y0:y1, x0:x1].reshape(-1, patch_size * patch_size)


class TrainAccumulator:
    """Per-bucket normal-equation statistics: sum a a^T, sum a b, and counts."""

    def __init__(self, bucket_count: int, dim: int):
        self.gram = np.zeros((bucket_count, dim, dim))
        self.cross = np.zeros((bucket_count, dim))
        self.count = np.zeros(bucket_count, dtype=np.int64)

    @property
    def bucket_count(self) -> int:
        return self.count.shape[0]

    @property
    def dim(self) -> int:
        return self.cross.shape[1]

    def accumulate(self, bucket: int, a, b: float) -> None:
        if not 0 <= bucket < self.bucket_count:
            raise IndexError(f"bucket {bucket} out of range [0, {self.bucket_count})")
        a = np.asarray(a, dtype=np.float64)
        self.gram[bucket] += np.outer(a, a)
        self.cross[bucket] += a * b
        self.count[bucket] += 1

    def add_batch(self, buckets, a, b) -> None:
        """Accumulate many samples; rows are grouped by bucket in index order."""
        buckets = np.asarray(buckets, dtype=np.int64)
        if buckets.size == 0:
            return
        if buckets.min() < 0 or buckets.max() >= self.bucket_count:
            raise IndexError("bucket index out of range")
        order = np.argsort(buckets, kind="stable")
        sorted_b = buckets[order]
        starts = np.flatnonzero(np.r_[True, sorted_b[1:] != sorted_b[:-1]])
        ends = np.r_[starts[1:], sorted_b.size]
        for s, e in zip(starts, ends):
            q = sorted_b[s]
            rows = order[s:e]
            aq = a[rows]
            g = aq.T @ aq
            self.gram[q] += np.triu(g) + np.triu(g, 1).T
            self.cross[q] += aq.T @ b[rows]
            self.count[q] += e - s

    def merge(self, other: "TrainAccumulator") -> "TrainAccumulator":
        return merge(self, other)


def merge(a: TrainAccumulator, b: TrainAccumulator) -> TrainAccumulator:
    if (a.bucket_count, a.dim) != (b.bucket_count, b.dim):
        raise ValueError("cannot merge accumulators of different shapes")
    out = TrainAccumulator(a.bucket_count, a.dim)
    out.gram = a.gram + b.gram
    out.cross = a.cross + b.cross
    out.count = a.count + b.count
    return out


def image_statistics(prep: Prepared, cfg: TrainConfig, cb: Codebook, threads: int = 1) -> TrainAccumulator:
    acc = TrainAccumulator(cfg.bucket_count, cfg.dim)
    y0, y1, x0, x1 = valid_region(prep.shape, cfg.patch_size)
    nx = x1 - x0
    buckets = image_buckets(prep, cfg, cb, threads)
    win = patch_windows(prep.base, cfg.patch_size)
    # row blocks bound the size of the copied patch matrix
    rows = max(1, (1 << 15) // max(nx, 1))
    for a in range(y0, y1, rows):
        b = min(a + rows, y1)
        patches = win[a:b, x0:x1].reshape(-1, cfg.dim)
        targets = prep.hr[a:b, x0:x1].ravel()
        acc.add_batch(buckets[(a - y0) * nx:(b - y0) * nx], patches, targets)
    return acc


def solve_bucket(gram: np.ndarray, cross: np.ndarray, ridge_lambda: float):
    """Solve ``(G + lambda * tr(G)/d * I) h = c``; returns ``None`` when singular."""
    d = gram.shape[0]
    reg = gram + (ridge_lambda * np.trace(gram) / d) * np.eye(d)
    diag_max = float(np.max(np.diag(reg)))
    if not diag_max > 0:
        return None
    try:
        factor = linalg.cho_factor(reg, lower=True, check_finite=True)
    except linalg.LinAlgError:
        return None
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < PIVOT_RTOL * diag_max:
        return None
    h = linalg.cho_solve(factor, cross)
    # one step of iterative refinement
    h = h + linalg.cho_solve(factor, cross - reg @ h)
    if not np.all(np.isfinite(h)):
        return None
    return h


def solve_filters(acc: TrainAccumulator, cfg: TrainConfig, threads: int = 1):
    """Learn one filter per bucket; returns ``(filters, fallback_flags)``.

    Buckets with fewer than ``cfg.min_samples`` samples, or whose system is
    numerically singular, get the delta filter and are flagged.
    """
    d = acc.dim
    patch = int(round(np.sqrt(d)))
    delta = delta_filter(patch)
    filters = np.tile(delta, (acc.bucket_count, 1))
    fallback = np.ones(acc.bucket_count, dtype=bool)

    def solve(q):
        if acc.count[q] < cfg.min_samples or acc.count[q] == 0:
            return q, None
        return q, solve_bucket(acc.gram[q], acc.cross[q], cfg.ridge_lambda)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for q, h in pool.map(solve, range(acc.bucket_count)):
            if h is not None:
                filters[q] = h
                fallback[q] = False
    return filters, fallback


def guard_flat_buckets(cfg: TrainConfig, cb: Codebook, filters: np.ndarray, fallback: np.ndarray) -> None:
    """Force a delta filter on flat-region buckets that would not preserve constants.

    Constant patches embed to the zero vector; every bucket reached from it
    must either be a delta or have coefficients summing to 1 within 1e-3.
    """
    zero_cluster = int(assign(np.zeros((1, cb.centroids.shape[1])), cb)[0])
    delta = delta_filter(cfg.patch_size)
    for phase in range(cfg.phases):
        q = zero_cluster * cfg.phases + phase if cfg.phase_stratify else zero_cluster
        if fallback[q]:
            continue
        if abs(filters[q].sum() - 1.0) > 1e-3:
            log.info("bucket %d receives flat patches but sums to %.4f; using delta", q, filters[q].sum())
            filters[q] = delta
            fallback[q] = True


def _subsample(features: np.ndarray, cap: int) -> np.ndarray:
    if features.shape[0] <= cap:
        return features
    stride = -(-features.shape[0] // cap)
    return features[::stride]


def train(hr_paths, cfg: TrainConfig, threads: int = 1, progress=None) -> Model:
    """Two-pass training over a list of HR image files (or arrays).

    Pass 1 clusters the features of every valid patch into the codebook;
    pass 2 buckets the patches against it and accumulates normal
    equations, which are then solved per bucket.
    """
    threads = max(1, int(threads))
    images = []
    for i, item in enumerate(hr_paths):
        img = load_image(item) if isinstance(item, (str, os.PathLike)) else as_image(item)
        images.append(img)
        if progress is not None:
            progress(f"loaded {i + 1}/{len(hr_paths)}")
    if not images:
        raise TrainingError("no training images given")

    with threadpool_limits(limits=1, user_api="blas"), ThreadPoolExecutor(max_workers=threads) as pool:
        prepared = [p for p in pool.map(lambda im: prepare(im, cfg), images) if p is not None]
        if not prepared:
            raise TrainingError("no usable training pairs: every image is smaller than one patch")

        feats = list(pool.map(lambda p: image_features(p, cfg), prepared))
        features = _subsample(np.concatenate(feats), cfg.feature_cap)
        if features.shape[0] < cfg.clusters:
            raise TrainingError(
                f"only {features.shape[0]} training patches for {cfg.clusters} clusters"
            )
        cb = kmeans_fit(features, cfg.clusters, cfg.seed, cfg.max_iter, cfg.tol, threads=threads)

        acc = TrainAccumulator(cfg.bucket_count, cfg.dim)
        # one batch of `threads` images in flight keeps memory at O(threads * K * d^2)
        for start in range(0, len(prepared), threads):
            batch = prepared[start:start + threads]
            for part in pool.map(lambda p: image_statistics(p, cfg, cb), batch):
                acc = merge(acc, part)
        if acc.count.sum() == 0:
            raise TrainingError("no usable training pairs")

        filters, fallback = solve_filters(acc, cfg, threads)
    guard_flat_buckets(cfg, cb, filters, fallback)
    return Model(cfg, cb, filters, acc.count.copy(), fallback)


def model_from_filters(cfg: TrainConfig, cb: Codebook, filters=None) -> Model:
    """Assemble a model from explicit filters (all deltas when omitted)."""
    if filters is None:
        filters = np.tile(delta_filter(cfg.patch_size), (cfg.bucket_count, 1))
        fallback = np.ones(cfg.bucket_count, dtype=bool)
    else:
        filters = np.asarray(filters, dtype=np.float64)
        delta = delta_filter(cfg.patch_size)
        fallback = np.all(filters == delta, axis=1)
    return Model(cfg, cb, filters, np.zeros(cfg.bucket_count, dtype=np.int64), fallback)
