"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a missing compiler or Cython must not break the
install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("cat0prox._kernels_c", ["src/cat0prox/_kernels_c.pyx"])],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
