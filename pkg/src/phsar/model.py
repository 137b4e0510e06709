"""Training configuration, the learned model, and the ``.phsar`` file format.

File layout (little-endian)::

    b"PHSAR\\0"                    6-byte magic
    u32 format version              currently 1
    u32 header length N
    N bytes UTF-8 JSON header       config, sizes, seed, counts, fallback flags
    K*5 float64                     codebook centroids, row-major
    B*d float64                     filters, one row per bucket
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .codebook import DEFAULT_CLUSTERS, DEFAULT_MAX_ITER, DEFAULT_TOL, Codebook
from .errors import ModelFileError
from .features import DEFAULT_WEIGHTS, FEATURE_DIM, check_weights
from .pst import DEFAULT_LP_SIGMA, DEFAULT_STRENGTH, DEFAULT_WARP, PstKernel, build_kernel

MAGIC = b"PHSAR\0"
FORMAT_VERSION = 1
DEFAULT_FEATURE_CAP = 2_000_000


@dataclass(frozen=True)
class TrainConfig:
    scale: int = 2
    patch_size: int = 11
    clusters: int = DEFAULT_CLUSTERS
    ridge_lambda: float = 1e-6
    min_samples: int | None = None
    pst_strength: float = DEFAULT_STRENGTH
    pst_warp: float = DEFAULT_WARP
    pst_sigma: float = DEFAULT_LP_SIGMA
    feature_weights: tuple = DEFAULT_WEIGHTS
    seed: int = 0
    phase_stratify: bool = True
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    feature_cap: int = DEFAULT_FEATURE_CAP

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 2:
            raise ValueError(f"scale must be an integer >= 2, got {self.scale}")
        if self.patch_size < 3 or self.patch_size % 2 == 0:
            raise ValueError(f"patch size must be odd and >= 3, got {self.patch_size}")
        if self.clusters < 1:
            raise ValueError(f"clusters must be >= 1, got {self.clusters}")
        if not self.ridge_lambda >= 0:
            raise ValueError(f"ridge lambda must be >= 0, got {self.ridge_lambda}")
        if self.min_samples is None:
            object.__setattr__(self, "min_samples", 4 * self.patch_size ** 2)
        elif self.min_samples < 0:
            raise ValueError(f"min samples must be >= 0, got {self.min_samples}")
        object.__setattr__(self, "feature_weights", check_weights(self.feature_weights))
        if self.pst_strength < 0 or not self.pst_warp > 0 or not self.pst_sigma > 0:
            raise ValueError("PST parameters need strength >= 0, warp > 0, sigma > 0")
        if self.max_iter < 1 or self.tol < 0 or self.feature_cap < 1:
            raise ValueError("k-means settings need max_iter >= 1, tol >= 0, feature_cap >= 1")

    @property
    def dim(self) -> int:
        return self.patch_size ** 2

    @property
    def phases(self) -> int:
        return self.scale ** 2 if self.phase_stratify else 1

    @property
    def bucket_count(self) -> int:
        return self.clusters * self.phases

    @property
    def uses_pst(self) -> bool:
        return self.feature_weights[3] != 0.0

    def pst_kernel(self, width: int, height: int) -> PstKernel:
        return build_kernel(width, height, self.pst_strength, self.pst_warp, self.pst_sigma)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feature_weights"] = list(self.feature_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["feature_weights"] = tuple(d["feature_weights"])
        return cls(**d)


def delta_filter(patch_size: int) -> np.ndarray:
    h = np.zeros(patch_size * patch_size)
    h[(patch_size * patch_size - 1) // 2] = 1.0
    return h


@dataclass(frozen=True, eq=False)
class Model:
    config: TrainConfig
    codebook: Codebook
    filters: np.ndarray
    counts: np.ndarray
    fallback: np.ndarray
    format_version: int = field(default=FORMAT_VERSION)

    def __post_init__(self):
        cfg = self.config
        filters = np.ascontiguousarray(self.filters, dtype=np.float64)
        if filters.shape != (cfg.bucket_count, cfg.dim):
            raise ValueError(
                f"expected filters of shape {(cfg.bucket_count, cfg.dim)}, got {filters.shape}"
            )
        if not np.all(np.isfinite(filters)):
            raise ValueError("filter coefficients must be finite")
        if self.codebook.k != cfg.clusters or self.codebook.centroids.shape[1] != FEATURE_DIM:
            raise ValueError("codebook does not match the configuration")
        counts = np.asarray(self.counts, dtype=np.int64).reshape(cfg.bucket_count)
        fallback = np.asarray(self.fallback, dtype=bool).reshape(cfg.bucket_count)
        for arr in (filters, counts, fallback):
            arr.setflags(write=False)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "fallback", fallback)

    @property
    def scale(self) -> int:
        return self.config.scale

    @property
    def bucket_count(self) -> int:
        return self.config.bucket_count

    def header(self) -> dict:
        cfg = self.config
        return {
            "format_version": self.format_version,
            "config": cfg.to_dict(),
            "k": cfg.clusters,
            "bucket_count": cfg.bucket_count,
            "d": cfg.dim,
            "seed": self.codebook.seed,
            "counts": [int(c) for c in self.counts],
            "fallback": [int(f) for f in self.fallback],
        }

    def to_bytes(self) -> bytes:
        header = json.dumps(self.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        return b"".join([
            MAGIC,
            struct.pack("<II", self.format_version, len(header)),
            header,
            self.codebook.centroids.astype("<f8").tobytes(),
            self.filters.astype("<f8").tobytes(),
        ])

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Model":
        view = memoryview(data)
        pos = 0

        def take(n: int, what: str) -> memoryview:
            nonlocal pos
            if pos + n > len(view):
                raise ModelFileError(
                    f"unexpected end of file while reading {what} "
                    f"(need {pos + n} bytes, have {len(view)})"
                )
            chunk = view[pos:pos + n]
            pos += n
            return chunk

        if bytes(take(len(MAGIC), "magic")) != MAGIC:
            raise ModelFileError("not a PHSAR model file (bad magic)")
        version, hlen = struct.unpack("<II", take(8, "version and header length"))
        if version != FORMAT_VERSION:
            raise ModelFileError(f"unsupported model format version {version}")
        try:
            header = json.loads(bytes(take(hlen, "header")).decode("utf-8"))
            cfg = TrainConfig.from_dict(header["config"])
            k, nb, d = int(header["k"]), int(header["bucket_count"]), int(header["d"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ModelFileError(f"corrupt model header: {exc}") from exc
        if (k, nb, d) != (cfg.clusters, cfg.bucket_count, cfg.dim):
            raise ModelFileError("model header sizes disagree with its configuration")
        centroids = np.frombuffer(take(8 * k * FEATURE_DIM, "centroids"), dtype="<f8")
        filters = np.frombuffer(take(8 * nb * d, "filters"), dtype="<f8")
        if pos != len(view):
            raise ModelFileError(f"{len(view) - pos} trailing bytes after model data")
        try:
            return cls(
                config=cfg,
                codebook=Codebook(k, centroids.reshape(k, FEATURE_DIM).astype(np.float64), int(header["seed"])),
                filters=filters.reshape(nb, d).astype(np.float64),
                counts=np.asarray(header["counts"], dtype=np.int64),
                fallback=np.asarray(header["fallback"], dtype=bool),
                format_version=version,
            )
        except ValueError as exc:
            raise ModelFileError(f"invalid model contents: {exc}") from exc

    def save(self, path) -> None:
        with open(os.fspath(path), "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Model":
        with open(os.fspath(path), "rb") as fh:
            return cls.from_bytes(fh.read())
