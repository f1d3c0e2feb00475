"""Build script: compiles the optional Cython kernel extension.

Set PLAYSTYLES_NO_EXT=1 to skip the extension entirely; the package then
runs on the pure-numpy kernel fallback.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("PLAYSTYLES_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "playstyles._kernels._ckern",
                    ["src/playstyles/_kernels/_ckern.pyx"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install pure-Python only.
        ext_modules = []

setup(ext_modules=ext_modules)
