"""Phase stretch anchored regression (PhSAR) single-image super-resolution.

Typical use::

    from phsar import TrainConfig, train, upscale, load_image

    model = train(paths, TrainConfig(scale=2))
    hr = upscale(load_image("scan.png"), model)
"""
from ._backend import kernels as _kernels
from .bench import EvalReport, evaluate, psnr
from .codebook import Codebook, kmeans_fit, nearest_centroid
from .errors import ImageFormatError, ModelFileError, TrainingError
from .features import assemble_feature, gradient_features
from .image import extract_patch, load_image, resize_bicubic, save_image
from .learner import TrainAccumulator, harvest_pairs, merge, solve_filters, train
from .model import Model, TrainConfig
from .pst import PstKernel, apply_pst, build_kernel, pst_feature
from .upscaler import upscale, upscale_ablated

BACKEND = _kernels.BACKEND

__all__ = [
    "BACKEND", "Codebook", "EvalReport", "ImageFormatError", "Model", "ModelFileError",
    "PstKernel", "TrainAccumulator", "TrainConfig", "TrainingError", "apply_pst",
    "assemble_feature", "build_kernel", "evaluate", "extract_patch", "gradient_features",
    "harvest_pairs", "kmeans_fit", "load_image", "merge", "nearest_centroid", "psnr",
    "pst_feature", "resize_bicubic", "save_image", "solve_filters", "train", "upscale",
    "upscale_ablated",
]
