"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure numpy fallbacks are selected
at import time), so the extension is marked optional: a failed compile
degrades to the slow path instead of failing the install.
"""

from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
    import numpy

    extensions = cythonize(
        [
            Extension(
                "disambig._kernels",
                ["src/disambig/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
