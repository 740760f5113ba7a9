"""Build script: compiles the optional native kernels.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here should not block a pure-Python install:
    STAIRSCAN_NO_NATIVE=1 pip install -e . --no-build-isolation
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("STAIRSCAN_NO_NATIVE"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "stairscan.kernels._native",
                    sources=["src/stairscan/kernels/_native.pyx"],
                    include_dirs=[np.get_include()],
                    language="c++",
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError as exc:  # pragma: no cover - build-time guard
        print(f"stairscan: skipping native kernels ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
