"""Build script with an optional compiled quadratic-form kernel.

The Cython extension accelerates the mode-pair contraction used by the
pointwise flux evaluator.  The package is fully functional without it: if
Cython or a C compiler is unavailable the build falls back to a pure-Python
wheel and the runtime selects the NumPy kernel automatically.
"""

from __future__ import annotations

import logging

from setuptools import setup

log = logging.getLogger("nearfield.setup")


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        log.warning("compiled kernel skipped (%s); using pure-Python fallback", exc)
        return []
    ext = Extension(
        "nearfield._kernels._quadform",
        sources=["src/nearfield/_kernels/_quadform.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions())
