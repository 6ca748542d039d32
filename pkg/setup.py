"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy/pure-Python
fallback is selected at import time), so any build failure here degrades
gracefully to a source-only install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/icsel/_accel/_fast.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"icsel: skipping compiled kernels ({exc}); pure fallback will be used")
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
