"""Build script for the optional compiled scan kernel.

The package is fully functional without the extension: `nncov._kernels`
falls back to a numpy implementation when the compiled module is absent.
Build failures (no C toolchain, no Cython) therefore downgrade to a
warning instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing, etc.
            warnings.warn(f"compiled kernel skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped ({ext.name}): {exc}")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython unavailable; installing with the pure-python kernel only")
        return []
    ext = Extension("nncov._kernels._native", ["src/nncov/_kernels/_native.pyx"])
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
