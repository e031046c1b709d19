"""Build script for the optional compiled solver kernel.

The package is pure Python plus one Cython extension (the group lasso
block-coordinate-descent kernel). If Cython or a C compiler is missing the
extension is skipped and the numpy fallback kernel is used at import time.

To build in a source checkout without installing:

    python setup.py build_ext --inplace
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SARTRE_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sartre._bcd_cy",
                    ["src/sartre/_bcd_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
