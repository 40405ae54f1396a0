"""Build the optional Cython counting kernel.

The package works without it: ``rare_rules._backend`` falls back to the
numpy implementation when the extension cannot be imported.
"""
import os
import platform

import numpy as np
from setuptools import Extension, setup

ext_modules = []
compile_args = ["-O3"]
if platform.machine().lower() in ("x86_64", "amd64"):
    compile_args.append("-mpopcnt")  # hardware popcount; present on every x86-64 CPU since ~2008
if os.environ.get("RARE_RULES_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rare_rules._ckernels",
                    ["src/rare_rules/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=compile_args,
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
