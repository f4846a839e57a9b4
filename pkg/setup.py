"""Build script for the optional compiled gate-kernel extension.

The package works without the extension: `qaead.backends` falls back to the
pure-numpy kernels at import time. Building with a C toolchain available
compiles `qaead._kernels_c`, which is typically 10-50x faster on the
statevector hot loops (see `python -m qaead.backend_bench`).
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Treat extension build failures as a warning, not an error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"WARNING: compiled kernels not built ({exc}); "
              "qaead will use the pure-numpy fallback kernels.")


extensions = [
    Extension(
        "qaead._kernels_c",
        ["src/qaead/_kernels_c.pyx"],
        include_dirs=[np.get_include()],
        # -fcx-limited-range: naive complex multiply (no inf/nan recovery
        # libcalls); gate amplitudes are always finite
        extra_compile_args=["-O3", "-fcx-limited-range"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    ),
    cmdclass={"build_ext": OptionalBuildExt},
)
