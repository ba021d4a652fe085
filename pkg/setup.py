"""Builds the optional Cython sampling kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); set REPEATERSIM_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("REPEATERSIM_NO_EXT"):
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "repeatersim._speedups",
                ["src/repeatersim/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                language="c++",
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
