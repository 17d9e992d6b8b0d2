"""Builds the optional compiled simulation kernels.

If Cython (or a C compiler) is unavailable the package still installs;
the simulation engine falls back to the pure numpy kernels at import.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/noiseball/backends/_core.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        # bit-reproducibility against the pure backend: no FP contraction
        ext.extra_compile_args = ["-O3", "-ffp-contract=off"]
except ImportError:
    print("Cython not available; installing with the pure-python backend only",
          file=sys.stderr)

setup(ext_modules=ext_modules)
