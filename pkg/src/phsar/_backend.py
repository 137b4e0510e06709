"""Kernel backend selection.

The compiled :mod:`phsar._kernels` extension is used when it imports;
otherwise the numpy fallback is used. Setting ``PHSAR_PURE_PYTHON=1``
forces the fallback.
"""
from __future__ import annotations

import logging
import os
from types import ModuleType

from . import _fallback

log = logging.getLogger(__name__)


def _load_compiled() -> ModuleType | None:
    if os.environ.get("PHSAR_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _kernels
    except ImportError:
        log.debug("compiled kernels unavailable, using numpy fallback")
        return None
    return _kernels


compiled = _load_compiled()
kernels: ModuleType = compiled if compiled is not None else _fallback


def get(name: str | None = None) -> ModuleType:
    """Return a backend module by name ("cython", "numpy") or the active one."""
    if name is None:
        return kernels
    if name == "numpy":
        return _fallback
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["numpy"] if compiled is None else ["cython", "numpy"]
