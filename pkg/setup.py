import os

import numpy as np
from setuptools import Extension, setup

# The compiled integrator is optional; the package falls back to pure Python.
ext_modules = []
PYX = "src/weakhyp/solver/_rk_ext.pyx"
if os.environ.get("WEAKHYP_NO_EXT") != "1" and os.path.exists(PYX):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "weakhyp.solver._rk_ext",
                    [PYX],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
