import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel is optional: morsecr falls back to the pure-numpy
# implementation at import time when the extension is unavailable.
extensions = [
    Extension(
        "morsecr._core",
        ["src/morsecr/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": 3, "embedsignature": True},
    )
)
