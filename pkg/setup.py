"""Build the optional Cython kernel.

The package works without it: ``acperf.kernels`` falls back to numpy when
the compiled module cannot be imported.  Set ``ACPERF_NO_EXT=1`` to skip
the build entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ACPERF_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "acperf.kernels._core",
                    ["src/acperf/kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
