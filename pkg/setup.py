from setuptools import Extension, setup

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "permdyn._kernels._core",
        ["src/permdyn/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off: no FMA fusion, keeps the compiled kernels
        # numerically aligned with the pure-numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
    if cythonize is not None
    else [],
)
