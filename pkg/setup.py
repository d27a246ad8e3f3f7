"""Build script: compiles the optional fast-kernel extension.

The extension is a pure speed-up; if Cython or a C compiler is missing the
install falls back to the numpy/scipy kernel implementations selected at
import time (see beamsim.kernels).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "beamsim.kernels._native",
                ["src/beamsim/kernels/_native.pyx"],
                extra_compile_args=["-O3"],
                libraries=["m"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    print("Cython not available; installing with pure-Python kernels only.")

setup(ext_modules=ext_modules)
