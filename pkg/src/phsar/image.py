"""Grayscale image container helpers, file I/O, bicubic resampling and patches.

Images are plain 2-D ``float64`` numpy arrays indexed ``img[y, x]`` with a
nominal range of [0, 1]. Quantisation only happens at file boundaries.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
from PIL import Image
from scipy import sparse

from .errors import ImageFormatError

CUBIC_A = -0.5

_READ_FORMATS = {"PNG", "PPM"}
_WRITE_FORMATS = {".png": "PNG", ".pgm": "PPM"}


def as_image(img) -> np.ndarray:
    """Validate and convert ``img`` to a 2-D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite samples")
    return arr


def clamp01(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0)


def load_image(path) -> np.ndarray:
    """Read a PNG or binary PGM file as a grayscale image in [0, 1].

    RGB(A) inputs are reduced to Rec.601 luma. Integer samples are divided
    by the maximum of their storage type (255 or 65535).
    """
    path = os.fspath(path)
    try:
        pil = Image.open(path)
        pil.load()
    except FileNotFoundError:
        raise
    except Image.UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: unrecognised image format") from exc

    if pil.format not in _READ_FORMATS:
        raise ImageFormatError(f"{path}: unsupported format {pil.format}")

    mode = pil.mode
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        data = np.asarray(pil, dtype=np.float64) / 65535.0
    elif mode == "L":
        data = np.asarray(pil, dtype=np.float64) / 255.0
    elif mode in ("RGB", "RGBA", "P", "LA", "1"):
        # integer weights in thousandths keep white at exactly 1.0
        rgb = np.asarray(pil.convert("RGB"), dtype=np.int64)
        data = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]) / 255000.0
    else:
        raise ImageFormatError(f"{path}: unsupported pixel mode {mode}")
    return clamp01(np.ascontiguousarray(data))


def quantize(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] samples to bytes with round-half-up after clamping."""
    return np.floor(clamp01(img) * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path) -> None:
    """Write an 8-bit grayscale PNG or PGM, chosen by file extension."""
    img = as_image(img)
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    fmt = _WRITE_FORMATS.get(ext)
    if fmt is None:
        raise ImageFormatError(f"{path}: cannot write format {ext or '(none)'}")
    Image.fromarray(quantize(img), mode="L").save(path, format=fmt)


def cubic_kernel(x):
    """Catmull-Rom cubic convolution kernel (a = -0.5)."""
    a = CUBIC_A
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2 = x * x
    x3 = x2 * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x < 1.0, near, np.where(x < 2.0, far, 0.0))


@lru_cache(maxsize=64)
def resample_matrix(n_in: int, n_out: int, antialias: bool) -> sparse.csr_matrix:
    """Sparse ``(n_out, n_in)`` matrix of 1-D bicubic resampling weights.

    Source positions follow the half-pixel convention and out-of-range taps
    are clamped onto the edge samples. Rows are normalised to sum to one.
    """
    ratio = n_in / n_out
    stretch = ratio if (antialias and n_out < n_in) else 1.0
    support = 2.0 * stretch

    rows, cols, vals = [], [], []
    for dst in range(n_out):
        center = (dst + 0.5) * ratio - 0.5
        lo = int(np.floor(center - support)) + 1
        hi = int(np.ceil(center + support)) - 1
        taps = np.arange(lo, hi + 1)
        w = cubic_kernel((taps - center) / stretch)
        keep = w != 0.0
        taps, w = taps[keep], w[keep]
        w = w / w.sum()
        idx = np.clip(taps, 0, n_in - 1)
        # merge taps that clamp onto the same source sample
        uniq, inv = np.unique(idx, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv, w)
        rows.extend([dst] * len(uniq))
        cols.extend(uniq.tolist())
        vals.extend(merged.tolist())
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(n_out, n_in))
    mat.sort_indices()
    return mat


def resize_bicubic(img, out_width: int, out_height: int, antialias: bool) -> np.ndarray:
    """Separable Catmull-Rom resampling to ``out_width x out_height``.

    When ``antialias`` is set, shrinking directions widen the kernel by the
    inverse scale factor. The result is clamped to [0, 1].
    """
    img = as_image(img)
    if out_width < 1 or out_height < 1:
        raise ValueError(f"output size must be positive, got {out_width}x{out_height}")
    h, w = img.shape
    wy = resample_matrix(h, int(out_height), bool(antialias))
    wx = resample_matrix(w, int(out_width), bool(antialias))
    tmp = np.asarray(wy @ img)
    out = np.asarray(wx @ tmp.T).T
    return clamp01(np.ascontiguousarray(out))


def extract_patch(img, cx: int, cy: int, patch_size: int) -> np.ndarray:
    """Row-major ``patch_size**2`` vector centred on ``(cx, cy)``.

    Taps outside the image replicate the nearest edge sample.
    """
    img = as_image(img)
    if patch_size < 3 or patch_size % 2 == 0:
        raise ValueError(f"patch size must be odd and >= 3, got {patch_size}")
    h, w = img.shape
    if not (0 <= cx < w and 0 <= cy < h):
        raise ValueError(f"center ({cx}, {cy}) outside {w}x{h} image")
    r = patch_size // 2
    ys = np.clip(np.arange(cy - r, cy + r + 1), 0, h - 1)
    xs = np.clip(np.arange(cx - r, cx + r + 1), 0, w - 1)
    return img[np.ix_(ys, xs)].ravel()
