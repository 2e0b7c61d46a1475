"""Build script for the optional compiled tape kernels.

The package is fully functional without the extension (a pure NumPy
fallback is selected at import time); the Cython module only removes
per-call overhead in the hot chain-product loops.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "diffqc._kernels._fast",
                ["src/diffqc/_kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.optional = True  # install proceeds on build failure; pure path takes over

setup(ext_modules=ext_modules)
