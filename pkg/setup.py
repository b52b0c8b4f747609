"""Build script with an optional compiled extension.

The package is pure Python by default.  If Cython and a C compiler are
available, a small native kernel module is compiled for the spiking
simulator's hot loops; otherwise the build silently falls back to the
NumPy implementations selected at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SCENEFACTOR_NO_NATIVE") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "scenefactor._kernels._native",
                    ["src/scenefactor/_kernels/_native.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
