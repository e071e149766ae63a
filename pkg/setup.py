import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "lifmap._kernels",
        ["src/lifmap/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # No fast-math / FMA contraction: the compiled and numpy paths must
        # produce bit-identical membrane traces.
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
