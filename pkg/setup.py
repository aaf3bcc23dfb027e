import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FIMBEAM_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "fimbeam._ckernels",
                    ["src/fimbeam/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
