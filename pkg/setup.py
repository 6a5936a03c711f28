"""Build script for the optional compiled split-search kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time); set SENTREL_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SENTREL_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "sentrel.kernels._split_cy",
                    ["src/sentrel/kernels/_split_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
