import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernels are optional: if this extension is missing at runtime
# the package falls back to the numpy implementation (see crenet.kernels).
ext_modules = [
    Extension(
        "crenet.kernels._conv",
        sources=["src/crenet/kernels/_conv.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level="3"))
