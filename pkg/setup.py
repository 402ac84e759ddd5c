"""Build hooks for the optional compiled backend.

The compiled extension is a pure speedup: if the toolchain is missing or
the build fails, installation proceeds and the package falls back to the
numpy reference backend at import time.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(
                "compiled backend build failed (%s); "
                "the numpy reference backend will be used" % (exc,)
            )

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(
                "compiled backend build failed for %s (%s); "
                "the numpy reference backend will be used" % (ext.name, exc)
            )


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        warnings.warn("compiled backend prerequisites missing (%s)" % (exc,))
        return []
    ext = Extension(
        "tsblend.backends._core",
        sources=["src/tsblend/backends/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps multiply-add sequences at two roundings so
        # responses match the numpy backend bit for bit; no -ffast-math for
        # the same reason.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
