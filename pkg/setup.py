"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time), so a failed compile should not block installation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ontorag._kernels._ckern",
                ["src/ontorag/_kernels/_ckern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
