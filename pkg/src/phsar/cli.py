"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments, 3 I/O or file-format errors,
4 training errors. Diagnostics go to stderr.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines whose
keys are long flag names without the leading dashes (``scale = 3``,
``pst-s = 0.4``, ``no-pst = true``). Flags given on the command line win.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import evaluate, list_images
from .errors import ImageFormatError, ModelFileError, TrainingError
from .image import load_image, save_image
from .learner import train
from .model import Model, TrainConfig
from .pst import DEFAULT_LP_SIGMA, DEFAULT_STRENGTH, DEFAULT_WARP, apply_pst, build_kernel
from .upscaler import upscale

log = logging.getLogger("phsar")

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_TRAIN = 0, 2, 3, 4

DEFAULTS = {
    "threads": 1,
    "scale": 2,
    "patch": 11,
    "clusters": 64,
    "ridge": 1e-6,
    "seed": 0,
    "min_samples": None,
    "max_iter": 100,
    "feature_cap": 2_000_000,
    "pst_s": DEFAULT_STRENGTH,
    "pst_w": DEFAULT_WARP,
    "pst_sigma": DEFAULT_LP_SIGMA,
    "no_pst": False,
    "no_phase_stratify": False,
    "ablate": False,
    "repeats": 3,
}
_BOOL_KEYS = {"no_pst", "no_phase_stratify", "ablate"}


class UsageError(Exception):
    """A flag value failed validation; the message names the flag."""


def read_config(path) -> dict:
    """Parse a ``key = value`` config file into a dict keyed like argparse dests."""
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config {path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


_INT_KEYS = {"threads", "scale", "patch", "clusters", "seed", "min_samples", "max_iter",
             "feature_cap", "repeats"}
_FLOAT_KEYS = {"ridge", "pst_s", "pst_w", "pst_sigma"}


def _coerce(key: str, value: str):
    flag = "--" + key.replace("_", "-")
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise UsageError(f"{flag}: invalid value {value!r} in config file") from None
    if key in _BOOL_KEYS:
        v = value.lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{flag}: expected a boolean in config file, got {value!r}")
    return value


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    file_cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for key in file_cfg:
        if not hasattr(args, key):
            log.warning("config key %r is not used by '%s'", key, args.command)
    for key, value in vars(args).items():
        if value is not None:
            continue
        if key in file_cfg:
            setattr(args, key, _coerce(key, file_cfg[key]))
        elif key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    return args


def _require(cond: bool, flag: str, msg: str):
    if not cond:
        raise UsageError(f"{flag}: {msg}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--threads", type=int, help="worker thread cap (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")


def _pst_flags(p: argparse.ArgumentParser):
    p.add_argument("--pst-s", type=float, dest="pst_s", help=f"phase strength (default {DEFAULT_STRENGTH})")
    p.add_argument("--pst-w", type=float, dest="pst_w", help=f"frequency warp (default {DEFAULT_WARP})")
    p.add_argument("--pst-sigma", type=float, dest="pst_sigma",
                   help=f"low-pass width, fraction of max radial frequency (default {DEFAULT_LP_SIGMA})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phsar", description="Phase stretch anchored regression super-resolution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn a filter bank from a folder of HR images")
    _common(p)
    p.add_argument("--hr-dir", dest="hr_dir", help="folder of PNG/PGM training images")
    p.add_argument("--scale", type=int, help="upscale factor: 2, 3 or 4 (default 2)")
    p.add_argument("--patch", type=int, help="odd patch size (default 11)")
    p.add_argument("--clusters", type=int, help="number of anchors K (default 64)")
    p.add_argument("--ridge", type=float, help="ridge weight relative to mean patch energy (default 1e-6)")
    p.add_argument("--seed", type=int, help="k-means seed (default 0)")
    p.add_argument("--min-samples", type=int, dest="min_samples", help="fallback threshold (default 4*patch^2)")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="k-means iteration cap (default 100)")
    p.add_argument("--feature-cap", type=int, dest="feature_cap", help="k-means sample cap (default 2000000)")
    _pst_flags(p)
    p.add_argument("--no-pst", action="store_true", dest="no_pst", default=None,
                   help="drop the PST feature (no-PST ablation model)")
    p.add_argument("--no-phase-stratify", action="store_true", dest="no_phase_stratify", default=None,
                   help="one filter per cluster instead of one per cluster and sub-pixel phase")
    p.add_argument("--out", help="output model path (.phsar)")

    p = sub.add_parser("upscale", help="upscale one image with a trained model")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("--output")

    p = sub.add_parser("eval", help="PSNR and timing against bicubic on a folder of HR images")
    _common(p)
    p.add_argument("--model")
    p.add_argument("--hr-dir", dest="hr_dir")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--ablate", action="store_true", default=None,
                   help="add the no-PST column (model must be trained with --no-pst)")
    p.add_argument("--ablated-model", dest="ablated_model",
                   help="separately trained --no-pst model for the ablation column")
    p.add_argument("--repeats", type=int, help="timing repeats, best is kept (default 3)")

    p = sub.add_parser("pst", help="write the PST phase image rescaled to [0, 1]")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--output")
    _pst_flags(p)

    p = sub.add_parser("inspect", help="print a model's header and per-bucket statistics")
    _common(p)
    p.add_argument("--model")
    return parser


def _need(args, *names):
    for name in names:
        _require(getattr(args, name, None) not in (None, ""), f"--{name.replace('_', '-')}", "is required")


def _check_threads(args):
    _require(args.threads >= 1, "--threads", f"must be >= 1, got {args.threads}")


def _check_pst(args):
    _require(args.pst_s >= 0, "--pst-s", f"must be >= 0, got {args.pst_s}")
    _require(args.pst_w > 0, "--pst-w", f"must be > 0, got {args.pst_w}")
    _require(args.pst_sigma > 0, "--pst-sigma", f"must be > 0, got {args.pst_sigma}")


def cmd_train(args) -> int:
    _need(args, "hr_dir", "out")
    _check_threads(args)
    _require(args.scale in (2, 3, 4), "--scale", f"must be 2, 3 or 4, got {args.scale}")
    _require(args.patch >= 3 and args.patch % 2 == 1, "--patch", f"must be odd and >= 3, got {args.patch}")
    _require(args.clusters >= 1, "--clusters", f"must be >= 1, got {args.clusters}")
    _require(args.ridge >= 0, "--ridge", f"must be >= 0, got {args.ridge}")
    _require(args.min_samples is None or args.min_samples >= 0, "--min-samples", "must be >= 0")
    _require(args.max_iter >= 1, "--max-iter", f"must be >= 1, got {args.max_iter}")
    _require(args.feature_cap >= 1, "--feature-cap", f"must be >= 1, got {args.feature_cap}")
    _check_pst(args)

    files = list_images(args.hr_dir)
    cfg = TrainConfig(
        scale=args.scale,
        patch_size=args.patch,
        clusters=args.clusters,
        ridge_lambda=args.ridge,
        min_samples=args.min_samples,
        pst_strength=args.pst_s,
        pst_warp=args.pst_w,
        pst_sigma=args.pst_sigma,
        feature_weights=(1.0, 1.0, 1.0, 0.0 if args.no_pst else 1.0),
        seed=args.seed,
        phase_stratify=not args.no_phase_stratify,
        max_iter=args.max_iter,
        feature_cap=args.feature_cap,
    )
    model = train(files, cfg, threads=args.threads, progress=lambda m: print(m, file=sys.stderr))
    model.save(args.out)

    counts = model.counts
    filled = counts[counts > 0]
    print(f"model: {args.out}")
    print(f"images: {len(files)}  pairs: {int(counts.sum())}")
    print(f"buckets: {model.bucket_count}  filled: {filled.size}  "
          f"fallback: {int(model.fallback.sum())}")
    if filled.size:
        print(f"bucket fill min/median/max: {int(filled.min())}/{int(np.median(filled))}/{int(filled.max())}")
    return EXIT_OK


def cmd_upscale(args) -> int:
    _need(args, "model", "input", "output")
    _check_threads(args)
    model = Model.load(args.model)
    lr = load_image(args.input)
    out = upscale(lr, model, threads=args.threads)
    save_image(out, args.output)
    print(f"{args.input} ({lr.shape[1]}x{lr.shape[0]}) -> {args.output} ({out.shape[1]}x{out.shape[0]})")
    return EXIT_OK


def cmd_eval(args) -> int:
    _need(args, "model", "hr_dir", "report")
    _check_threads(args)
    _require(args.repeats >= 1, "--repeats", f"must be >= 1, got {args.repeats}")
    model = Model.load(args.model)
    ablated = Model.load(args.ablated_model) if args.ablated_model else None
    if args.ablate and ablated is None and model.config.uses_pst:
        raise UsageError("--ablate: the model was trained with PST; train it with --no-pst "
                         "or pass --ablated-model")
    if ablated is not None and ablated.config.uses_pst:
        raise UsageError("--ablated-model: model was trained with PST")
    report = evaluate(model, args.hr_dir, ablate=bool(args.ablate), ablated_model=ablated,
                      threads=args.threads, repeats=args.repeats)
    report.write(args.report)
    print(report.table())
    return EXIT_OK


def cmd_pst(args) -> int:
    _need(args, "input", "output")
    _check_pst(args)
    img = load_image(args.input)
    phase = apply_pst(img, build_kernel(img.shape[1], img.shape[0], args.pst_s, args.pst_w, args.pst_sigma))
    lo, hi = float(phase.min()), float(phase.max())
    scaled = (phase - lo) / (hi - lo) if hi > lo else np.zeros_like(phase)
    save_image(scaled, args.output)
    print(f"phase range [{lo:.6f}, {hi:.6f}] rad -> {args.output}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    _need(args, "model")
    model = Model.load(args.model)
    header = model.header()
    cfg = header["config"]
    print(f"format version: {header['format_version']}")
    print(f"sha256: {model.digest()}")
    for key in sorted(cfg):
        print(f"  {key}: {cfg[key]}")
    print(f"K={header['k']}  buckets={header['bucket_count']}  d={header['d']}  seed={header['seed']}")
    print(f"fallback buckets: {int(model.fallback.sum())}")
    print(f"{'bucket':>6} {'count':>9} {'fallback':>8} {'l2 norm':>10} {'sum':>10}")
    norms = np.linalg.norm(model.filters, axis=1)
    sums = model.filters.sum(axis=1)
    for q in range(model.bucket_count):
        print(f"{q:>6} {int(model.counts[q]):>9} {int(model.fallback[q]):>8} {norms[q]:>10.4f} {sums[q]:>10.4f}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "upscale": cmd_upscale,
    "eval": cmd_eval,
    "pst": cmd_pst,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        resolve(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except (ModelFileError, ImageFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
