import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffast-math is deliberately absent: the serial/parallel bitwise-identity
# contract of the factor kernel forbids value-changing optimizations.
compile_args = ["-O3", "-fopenmp"]
link_args = ["-fopenmp"]
if os.environ.get("GVPLAN_NO_OPENMP"):
    compile_args = ["-O3"]
    link_args = []

extensions = [
    Extension(
        "gvplan._kernels",
        ["src/gvplan/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
