"""Build script for the optional compiled kernels.

The package works without them; ``phsar._backend`` falls back to the
numpy implementation when ``phsar._kernels`` cannot be imported.
"""
import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython
    cythonize = None

openmp = [] if sys.platform == "darwin" or os.environ.get("PHSAR_NO_OPENMP") else ["-fopenmp"]

ext_modules = []
if cythonize is not None and not os.environ.get("PHSAR_PURE_PYTHON"):
    ext_modules = cythonize(
        [
            Extension(
                "phsar._kernels",
                sources=["src/phsar/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"] + openmp,
                extra_link_args=openmp,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
