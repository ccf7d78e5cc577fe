import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build without the extension; the numpy fallback is used
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [Extension(
            "artifact._kernels",
            ["src/artifact/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
