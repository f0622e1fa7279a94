"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failing C build degrades to pure Python instead of
failing the install.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: skipping C extension build ({exc}); "
                  "falling back to pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "falling back to pure-Python kernels")


try:
    from Cython.Build import cythonize

    # No -ffast-math: kernel results must match the numpy fallback
    # butterfly-for-butterfly.
    extensions = cythonize(
        [
            Extension(
                "hodw._kernels",
                ["src/hodw/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(
    ext_modules=extensions,
    cmdclass={"build_ext": optional_build_ext},
)
