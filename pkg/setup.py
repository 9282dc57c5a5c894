"""Build the optional compiled core; the package works without it."""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

CSRC = ["src/nbgraph/csrc/lfgraph.c", "src/nbgraph/csrc/seqgraph.c", "src/nbgraph/csrc/bench.c"]


class OptionalBuild(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    def _skip(self, exc):
        if os.environ.get("NBGRAPH_REQUIRE_NATIVE"):
            raise exc
        print(f"nbgraph: compiled core not built ({exc}); using the pure-Python engine", file=sys.stderr)


def extensions():
    if os.environ.get("NBGRAPH_NO_NATIVE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "nbgraph._native",
        ["src/nbgraph/_native.pyx", *CSRC],
        include_dirs=["src/nbgraph"],
        extra_compile_args=["-std=gnu11", "-O2", "-D_GNU_SOURCE"],
        extra_link_args=["-lpthread"],
    )
    try:
        return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)
    except Exception as exc:  # noqa: BLE001
        if os.environ.get("NBGRAPH_REQUIRE_NATIVE"):
            raise
        print(f"nbgraph: cythonize failed ({exc}); using the pure-Python engine", file=sys.stderr)
        return []


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuild})
