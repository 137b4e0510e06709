"""Desk-scale natural-image corpus built from images bundled with
scikit-image and scikit-learn (no network access needed)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

CROP = 192

# (source, fractional centre row, fractional centre column) of each crop
TRAIN_CROPS = [
    ("astronaut", 0.3, 0.3), ("astronaut", 0.7, 0.7),
    ("coffee", 0.35, 0.3), ("coffee", 0.6, 0.7),
    ("rocket", 0.5, 0.25), ("rocket", 0.5, 0.7),
    ("china", 0.35, 0.35), ("china", 0.7, 0.7),
    ("flower", 0.4, 0.4), ("flower", 0.65, 0.75),
    ("hubble_deep_field", 0.3, 0.3), ("hubble_deep_field", 0.7, 0.6),
    ("retina", 0.4, 0.45), ("retina", 0.6, 0.6),
    ("chelsea", 0.5, 0.5), ("grass", 0.5, 0.5), ("gravel", 0.5, 0.5),
    ("brick", 0.5, 0.5), ("immunohistochemistry", 0.5, 0.5), ("cell", 0.5, 0.5),
]
HELDOUT_CROPS = [
    ("camera", 0.4, 0.5), ("moon", 0.5, 0.5), ("coins", 0.5, 0.5),
    ("shepp_logan_phantom", 0.5, 0.5), ("motorcycle_right", 0.5, 0.5), ("page", 0.5, 0.5),
]


def _luma(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype == bool:
        img = img.astype(np.float64)
    elif np.issubdtype(img.dtype, np.integer):
        img = img / float(np.iinfo(img.dtype).max)
    img = img.astype(np.float64)
    if img.ndim == 3:
        img = img[..., :3] @ np.array([0.299, 0.587, 0.114])
    return np.clip(img, 0.0, 1.0)


def source_image(name: str) -> np.ndarray:
    if name in ("china", "flower"):
        from sklearn.datasets import load_sample_image

        return _luma(load_sample_image(f"{name}.jpg"))
    import skimage.data

    if name == "motorcycle_right":
        return _luma(skimage.data.stereo_motorcycle()[1])
    return _luma(getattr(skimage.data, name)())


def crop(img: np.ndarray, fy: float, fx: float, size: int = CROP) -> np.ndarray:
    h, w = img.shape
    s = min(size, h, w)
    y = int(np.clip(round(fy * h - s / 2), 0, h - s))
    x = int(np.clip(round(fx * w - s / 2), 0, w - s))
    return img[y:y + s, x:x + s]


def write_corpus(root: Path) -> tuple[Path, Path]:
    """Write ``train/`` and ``heldout/`` PNG folders under ``root``."""
    from phsar.image import save_image

    dirs = []
    for sub, crops in (("train", TRAIN_CROPS), ("heldout", HELDOUT_CROPS)):
        d = root / sub
        d.mkdir(parents=True, exist_ok=True)
        for i, (name, fy, fx) in enumerate(crops):
            save_image(crop(source_image(name), fy, fx), d / f"{i:02d}_{name}.png")
        dirs.append(d)
    return dirs[0], dirs[1]
