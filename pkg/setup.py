"""Build script: compiles the optional native kernel.

The package works without the extension (a pure NumPy fallback is selected at
import time), so the build must never fail because Cython or a C compiler is
missing.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "polyx._kernel.native",
                sources=["src/polyx/_kernel/native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
