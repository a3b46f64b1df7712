"""Build script: compiles the closed-loop stepping kernel when Cython and a C
compiler are available.  The package is fully functional without the extension
(a pure-Python kernel is selected at import time), just slower on long runs.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Degrade to the pure-Python kernel instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-Python fallback")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; using pure-Python kernel")
        return []
    ext = Extension(
        "ofo.engine._speedup",
        sources=["src/ofo/engine/_speedup.pyx"],
        # -ffp-contract=off keeps the compiled kernel bit-identical to the
        # pure-Python one (no FMA contraction).
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level="3")


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
