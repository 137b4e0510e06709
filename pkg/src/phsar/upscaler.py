"""Inference: cheap-upscale, bucket every output pixel, apply its filter.

Each output pixel is a single dot product between its base-image patch
and one learned filter, so the output at a pixel depends only on the
input near it (plus the bucket choice).
"""
from __future__ import annotations

import numpy as np

from . import _backend
from .codebook import assign
from .image import as_image, clamp01, resize_bicubic
from .learner import bucket_index, phase_classes
from .model import Model
from .pst import apply_pst


def check_input(lr: np.ndarray, model: Model) -> np.ndarray:
    lr = as_image(lr)
    p = model.config.patch_size
    if lr.shape[0] < p or lr.shape[1] < p:
        raise ValueError(
            f"input {lr.shape[1]}x{lr.shape[0]} is too small: minimum is {p}x{p} "
            f"for patch size {p}"
        )
    return lr


def cheap_upscale(lr, scale: int) -> np.ndarray:
    lr = as_image(lr)
    return resize_bicubic(lr, lr.shape[1] * scale, lr.shape[0] * scale, antialias=False)


def bucket_map(lr, model: Model, threads: int = 1, drop_pst: bool = False):
    """Return ``(base, buckets)`` with the bucket chosen for every output pixel."""
    lr = check_input(lr, model)
    cfg = model.config
    base = cheap_upscale(lr, cfg.scale)
    weights = cfg.feature_weights
    if drop_pst:
        weights = weights[:3] + (0.0,)
    phase = None
    if weights[3] != 0.0:
        phase = apply_pst(base, cfg.pst_kernel(base.shape[1], base.shape[0]))
    h, w = base.shape
    feats = _backend.kernels.patch_features(base, phase, cfg.patch_size, weights, 0, h, 0, w, threads)
    clusters = assign(feats, model.codebook, threads)
    buckets = bucket_index(clusters, phase_classes(0, h, 0, w, cfg.scale), cfg)
    return base, np.ascontiguousarray(buckets.reshape(h, w))


def apply_bucket_filters(base: np.ndarray, buckets: np.ndarray, model: Model, threads: int = 1) -> np.ndarray:
    """Unclamped per-pixel filter response for a fixed bucket map."""
    buckets = np.ascontiguousarray(buckets, dtype=np.int64)
    if buckets.shape != base.shape:
        raise ValueError("bucket map and base image shapes differ")
    return _backend.kernels.apply_filters(
        np.ascontiguousarray(base), buckets, model.filters, model.config.patch_size, 0, 0, threads
    )


def upscale(lr, model: Model, threads: int = 1) -> np.ndarray:
    """Upscale ``lr`` by the model's scale factor."""
    base, buckets = bucket_map(lr, model, threads)
    return clamp01(apply_bucket_filters(base, buckets, model, threads))


def upscale_ablated(lr, model: Model, drop_pst: bool = True, threads: int = 1) -> np.ndarray:
    """Upscale with the PST feature removed from bucket selection.

    Only valid for models trained with a zero PST weight, so that training
    and inference see the same feature space.
    """
    if drop_pst and model.config.uses_pst:
        raise ValueError(
            "model was trained with a non-zero PST weight; the PST-free ablation needs a "
            "model trained with pst weight 0"
        )
    base, buckets = bucket_map(lr, model, threads, drop_pst=drop_pst)
    return clamp01(apply_bucket_filters(base, buckets, model, threads))


def upscale_frozen(lr, model: Model, buckets: np.ndarray, clamp: bool = False, threads: int = 1) -> np.ndarray:
    """Replay inference with a previously recorded bucket map.

    With ``clamp=False`` the result is linear in the base image.
    """
    lr = check_input(lr, model)
    base = cheap_upscale(lr, model.scale)
    out = apply_bucket_filters(base, buckets, model, threads)
    return clamp01(out) if clamp else out
