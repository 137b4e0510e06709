"""Pure numpy implementation of the per-pixel kernels.

Mirrors :mod:`phsar._kernels` call for call. Work is processed in chunks of
rows so the temporary patch stacks stay within a few tens of megabytes.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .features import tensor_features

BACKEND = "numpy"

_CHUNK_PIXELS = 1 << 14


def _windows(img: np.ndarray, patch_size: int) -> np.ndarray:
    r = patch_size // 2
    padded = np.pad(img, r, mode="edge")
    return sliding_window_view(padded, (patch_size, patch_size))


def _row_chunks(y0: int, y1: int, nx: int):
    step = max(1, _CHUNK_PIXELS // max(nx, 1))
    for start in range(y0, y1, step):
        yield start, min(start + step, y1)


def patch_features(img, phase, patch_size, weights, y0, y1, x0, x1, threads=1):
    """Embedding for every centre in rows [y0, y1) x columns [x0, x1)."""
    if patch_size < 3 or patch_size % 2 == 0:
        raise ValueError(f"unsupported patch size {patch_size}")
    ws, wc, wa, wp = (float(w) for w in weights)
    ny, nx = y1 - y0, x1 - x0
    out = np.zeros((max(ny, 0) * max(nx, 0), 5))
    if ny <= 0 or nx <= 0:
        return out
    win = _windows(img, patch_size)
    pwin = _windows(np.abs(phase), patch_size) if phase is not None else None
    pos = 0
    for a, b in _row_chunks(y0, y1, nx):
        stack = win[a:b, x0:x1].reshape(-1, patch_size, patch_size)
        gy, gx = np.gradient(stack, axis=(1, 2))
        angle, strength, coherence = tensor_features(
            np.sum(gx * gx, axis=(1, 2)),
            np.sum(gx * gy, axis=(1, 2)),
            np.sum(gy * gy, axis=(1, 2)),
        )
        flat = strength == 0.0
        n = stack.shape[0]
        block = out[pos:pos + n]
        block[:, 0] = strength * ws
        block[:, 1] = coherence * wc
        block[:, 2] = np.where(flat, 0.0, np.cos(2.0 * angle) * wa)
        block[:, 3] = np.where(flat, 0.0, np.sin(2.0 * angle) * wa)
        if pwin is not None:
            pst = pwin[a:b, x0:x1].reshape(n, -1).mean(axis=1)
            block[:, 4] = pst / np.pi * wp
        pos += n
    return out


def assign(features, centroids, threads=1):
    """Index of the nearest centroid per row; ties go to the lowest index."""
    features = np.asarray(features, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if features.shape[1] != centroids.shape[1]:
        raise ValueError("feature and centroid dimensions differ")
    n = features.shape[0]
    out = np.empty(n, dtype=np.int64)
    step = max(1, (1 << 20) // max(centroids.shape[0] * features.shape[1], 1))
    for a in range(0, n, step):
        diff = features[a:a + step, None, :] - centroids[None, :, :]
        dist = np.zeros(diff.shape[:2])
        for c in range(features.shape[1]):
            dist += diff[:, :, c] * diff[:, :, c]
        out[a:a + step] = np.argmin(dist, axis=1)
    return out


def apply_filters(img, buckets, filters, patch_size, y0, x0, threads=1):
    """Dot product of each centre's patch with the filter of its bucket."""
    buckets = np.asarray(buckets, dtype=np.int64)
    filters = np.asarray(filters, dtype=np.float64)
    if filters.shape[1] != patch_size * patch_size:
        raise ValueError("filter length does not match patch size")
    ny, nx = buckets.shape
    out = np.zeros((ny, nx))
    if ny == 0 or nx == 0:
        return out
    if buckets.min() < 0 or buckets.max() >= filters.shape[0]:
        raise IndexError("bucket index out of range")
    win = _windows(img, patch_size)
    for a, b in _row_chunks(y0, y0 + ny, nx):
        stack = win[a:b, x0:x0 + nx].reshape(-1, patch_size * patch_size)
        h = filters[buckets[a - y0:b - y0].ravel()]
        out[a - y0:b - y0] = np.einsum("nd,nd->n", stack, h).reshape(b - a, nx)
    return out
