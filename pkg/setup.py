"""Builds the optional compiled integration kernel.

If Cython or a C compiler is unavailable the package installs anyway and
falls back to the pure-Python kernel at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "solvforge._rk4_cy",
                ["src/solvforge/_rk4_cy.pyx"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
