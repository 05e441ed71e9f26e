"""Build script for the optional compiled kernels.

The package works without the extension; `scanfit._kernels` falls back to
numpy implementations when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "scanfit._kernels._core",
                ["src/scanfit/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
