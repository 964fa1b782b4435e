"""Build shim for the optional compiled engine.

The package is pure Python plus one accelerator extension (cbtcsim._core).
If Cython or a C toolchain is unavailable the install still succeeds and the
simulator falls back to the pure-Python engine at import time.

Note: no -ffast-math and no -march flags. The extension must produce
bit-identical IEEE results to the Python engine (same op order, same libm).
"""

import os

from setuptools import Extension, setup

_PYX = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                    "src", "cbtcsim", "_core.pyx")

ext_modules = []
if os.path.exists(_PYX):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "cbtcsim._core",
                    sources=["src/cbtcsim/_core.pyx"],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
