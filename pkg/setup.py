"""Build the optional Cython DCD kernel.

The package works without it: ``dcdmimo.kernels`` falls back to the pure
Python implementation when the extension cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DCDMIMO_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext = Extension(
            "dcdmimo._dcd_ext",
            ["src/dcdmimo/_dcd_ext.pyx"],
            include_dirs=[np.get_include()],
            # keep IEEE op order identical to the Python fallback
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
        ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
