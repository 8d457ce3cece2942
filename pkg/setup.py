"""Build script for the optional compiled event kernel.

The package is fully functional without the extension: trapsim.backend falls
back to the pure-Python kernel when trapsim._kernel is missing, so the build
is marked optional and a failed compile does not abort installation.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "trapsim._kernel",
                ["src/trapsim/_kernel.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
