"""Builds the optional Cython kernels; the package works without them."""

import os
import sys

from setuptools import setup

ext_modules = []
if not os.environ.get("PROBAPPROX_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython/numpy unavailable; installing pure-Python kernels only", file=sys.stderr)
    else:
        # no FMA contraction: the compiled kernels must round like the Python twin
        extra = [] if sys.platform == "win32" else ["-O2", "-ffp-contract=off", "-fno-fast-math"]
        ext_modules = cythonize(
            [
                Extension(
                    "probapprox._kernels._ckernels",
                    ["src/probapprox/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=extra,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
