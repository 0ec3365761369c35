"""Build script: compiles the optional edit-distance extension when Cython
and a C compiler are available, otherwise installs the pure-Python package
unchanged (textcf.kernels falls back automatically at import time)."""

import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TEXTCF_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "textcf._speedups",
                    sources=["src/textcf/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except Exception as exc:  # noqa: BLE001 - any build-chain problem means "no extension"
        print(f"textcf: skipping compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
