import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ADAPTKIT_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # the pure-Python fallback is used instead
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "adaptkit._kernels",
                    ["src/adaptkit/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
