"""Patch features: structure-tensor gradient statistics plus the PST scalar.

The clustering embedding has five components::

    [strength*wS, coherence*wC, cos(2*angle)*wA, sin(2*angle)*wA, (pst/pi)*wP]

Angle enters through the doubled-angle pair so that orientations theta and
theta + pi map to the same point and the 0/pi wrap is continuous.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

FEATURE_DIM = 5
DEFAULT_WEIGHTS = (1.0, 1.0, 1.0, 1.0)

# Largest eigenvalue at or below this is treated as a flat patch. Resampling
# round-off on constant images leaves gradients around 1e-16; 8-bit image
# content never produces an eigenvalue this small.
EIGEN_FLOOR = 1e-16


class GradientFeature(NamedTuple):
    angle: float
    strength: float
    coherence: float


def check_weights(weights) -> tuple[float, float, float, float]:
    w = tuple(float(x) for x in weights)
    if len(w) != 4:
        raise ValueError(f"expected 4 feature weights, got {len(w)}")
    if any(not np.isfinite(x) or x < 0 for x in w):
        raise ValueError(f"feature weights must be finite and >= 0, got {w}")
    return w


def tensor_features(sxx, sxy, syy):
    """Angle, strength and coherence from summed gradient products.

    Works elementwise on scalars or arrays. Eigenvalues come from the
    closed-form solution of the symmetric 2x2 tensor.
    """
    sxx = np.asarray(sxx, dtype=np.float64)
    sxy = np.asarray(sxy, dtype=np.float64)
    syy = np.asarray(syy, dtype=np.float64)
    half_tr = 0.5 * (sxx + syy)
    half_diff = 0.5 * (sxx - syy)
    disc = np.sqrt(half_diff * half_diff + sxy * sxy)
    l1 = half_tr + disc
    l2 = np.maximum(half_tr - disc, 0.0)

    flat = l1 <= EIGEN_FLOOR
    s1 = np.sqrt(np.where(flat, 0.0, l1))
    s2 = np.sqrt(np.where(flat, 0.0, l2))
    denom = np.where(flat, 1.0, s1 + s2)
    coherence = np.where(flat, 0.0, (s1 - s2) / denom)

    angle = 0.5 * np.arctan2(2.0 * sxy, sxx - syy)
    angle = np.where(angle < 0.0, angle + np.pi, angle)
    angle = np.where(angle >= np.pi, angle - np.pi, angle)
    angle = np.where(flat, 0.0, angle) + 0.0
    return angle, s1, coherence


def patch_gradients(patch: np.ndarray):
    """Central-difference gradients inside a square patch (one-sided at its rim)."""
    values = np.asarray(patch, dtype=np.float64)
    size = int(round(np.sqrt(values.size)))
    if size * size != values.size or size < 3:
        raise ValueError(f"patch of length {values.size} is not a square of side >= 3")
    grid = values.reshape(size, size)
    gy, gx = np.gradient(grid)
    return gx, gy


def gradient_features(patch) -> GradientFeature:
    """Dominant gradient angle in [0, pi), strength and coherence of a patch."""
    gx, gy = patch_gradients(patch)
    angle, strength, coherence = tensor_features(
        np.sum(gx * gx), np.sum(gx * gy), np.sum(gy * gy)
    )
    return GradientFeature(float(angle), float(strength), float(coherence))


def embed(angle, strength, coherence, pst, weights=DEFAULT_WEIGHTS) -> np.ndarray:
    """Vectorised clustering embedding; returns shape ``(..., 5)``."""
    ws, wc, wa, wp = check_weights(weights)
    angle = np.asarray(angle, dtype=np.float64)
    strength = np.asarray(strength, dtype=np.float64)
    flat = strength == 0.0
    out = np.empty(np.broadcast(angle, strength).shape + (FEATURE_DIM,))
    out[..., 0] = strength * ws
    out[..., 1] = np.asarray(coherence, dtype=np.float64) * wc
    out[..., 2] = np.where(flat, 0.0, np.cos(2.0 * angle) * wa)
    out[..., 3] = np.where(flat, 0.0, np.sin(2.0 * angle) * wa)
    out[..., 4] = np.asarray(pst, dtype=np.float64) / np.pi * wp
    return out


def assemble_feature(g, pst_value: float, weights=DEFAULT_WEIGHTS) -> np.ndarray:
    """Five-component embedding of one patch's (angle, strength, coherence) and PST value."""
    angle, strength, coherence = g
    if strength < 0 or not 0.0 <= coherence <= 1.0 or not 0.0 <= pst_value <= np.pi:
        raise ValueError("feature values outside their valid ranges")
    return embed(angle, strength, coherence, pst_value, weights)
