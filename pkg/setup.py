import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RGVIX_NO_EXTENSION", "0") not in ("1", "true", "True"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rgvix._kernels",
                    ["src/rgvix/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython/numpy at build time: install pure-Python only. The
        # package falls back to rgvix._kernels_py at import.
        ext_modules = []

setup(ext_modules=ext_modules)
