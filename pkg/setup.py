"""Build script: compiles the geometry kernel extension when a toolchain is
available and falls back to the pure-Python kernels otherwise."""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the extension would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"building the compiled geometry kernel failed ({exc}); "
                          "falling back to the pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to the pure-Python kernels")


ext_modules = []
cmdclass = {}
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "flatchains._geom._kernels",
                ["src/flatchains/_geom/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
    cmdclass = {"build_ext": optional_build_ext}
except ImportError as exc:
    warnings.warn(f"Cython/numpy unavailable at build time ({exc}); "
                  "installing without the compiled kernels")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
