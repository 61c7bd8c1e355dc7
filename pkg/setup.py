import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # source tree still works without the extension: the pure-Python loops
    # are selected at import time
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sl2ode._core._fastloops",
                ["src/sl2ode/_core/_fastloops.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
