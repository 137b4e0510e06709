"""Compare the compiled and numpy kernel backends.

Times the three hot kernels on a 384x384 base image and a full x2
upscale with a random 64-cluster model, best of ``--repeats`` runs.

    python benchmarks/bench_backends.py --repeats 5 --threads 1
"""
import argparse
import json

import numpy as np

from phsar import _backend
from phsar.bench import best_of, machine_info
from phsar.codebook import Codebook
from phsar.image import resize_bicubic
from phsar.model import Model, TrainConfig
from phsar.pst import apply_pst, build_kernel
from phsar.upscaler import upscale


def random_model(patch=11, clusters=64, seed=0):
    rng = np.random.default_rng(seed)
    cfg = TrainConfig(scale=2, patch_size=patch, clusters=clusters)
    cb = Codebook(clusters, rng.random((clusters, 5)), seed)
    filters = rng.normal(0, 0.01, (cfg.bucket_count, cfg.dim))
    filters[:, cfg.dim // 2] += 1.0
    return Model(cfg, cb, filters, np.zeros(cfg.bucket_count, dtype=np.int64),
                 np.zeros(cfg.bucket_count, dtype=bool))


def run(name, repeats, threads, size):
    k = _backend.get(name)
    rng = np.random.default_rng(1)
    lr = resize_bicubic(rng.random((size // 8, size // 8)), size // 2, size // 2, False)
    base = resize_bicubic(lr, size, size, False)
    phase = apply_pst(base, build_kernel(size, size))
    model = random_model()
    p = model.config.patch_size
    w = model.config.feature_weights

    feats, t_feat = best_of(lambda: k.patch_features(base, phase, p, w, 0, size, 0, size, threads), repeats)
    labels, t_assign = best_of(lambda: k.assign(feats, model.codebook.centroids, threads), repeats)
    buckets = np.ascontiguousarray((labels * 4).reshape(size, size))
    _, t_apply = best_of(lambda: k.apply_filters(base, buckets, model.filters, p, 0, 0, threads), repeats)

    saved = _backend.kernels
    _backend.kernels = k
    try:
        _, t_up = best_of(lambda: upscale(lr, model, threads), repeats)
    finally:
        _backend.kernels = saved
    return {"features": t_feat, "assign": t_assign, "apply": t_apply, "upscale": t_up}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--size", type=int, default=384)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()

    results = {name: run(name, args.repeats, args.threads, args.size) for name in _backend.available()}
    names = list(results)
    print(f"{'kernel':<10}" + "".join(f"{n + ' ms':>14}" for n in names)
          + ("     speedup" if len(names) == 2 else ""))
    for key in ("features", "assign", "apply", "upscale"):
        line = f"{key:<10}" + "".join(f"{results[n][key]:14.2f}" for n in names)
        if len(names) == 2:
            line += f"{results['numpy'][key] / results['cython'][key]:11.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"results": results, "size": args.size, "threads": args.threads,
                       "machine": machine_info()}, fh, indent=2)


if __name__ == "__main__":
    main()
