"""Builds the optional compiled kernels.

The package is fully functional without the extension: ``proofrec._kernels``
falls back to the pure-Python implementation when the compiled module is
missing. Set PROOFREC_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PROOFREC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "proofrec._kernels._bpe_cy",
                    ["src/proofrec/_kernels/_bpe_cy.pyx"],
                    optional=True,
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
