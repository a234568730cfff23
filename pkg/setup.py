"""Build script: compiles the optional fast kernels when a toolchain is present.

The package is fully functional without the extension; `specdet._kernels`
falls back to the NumPy reference implementation at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SPECDET_NO_BUILD_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "specdet._kernels._ckernels",
                    ["src/specdet/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - toolchain dependent
        print(f"specdet: skipping extension build ({exc}); pure-Python kernels will be used")
        ext_modules = []

setup(ext_modules=ext_modules)
