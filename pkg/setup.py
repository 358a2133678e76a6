"""Build script for the optional compiled kernel.

The package is pure Python except for formulakit._speedups, a small Cython
module holding the token-Levenshtein inner loop. If Cython or a C compiler
is unavailable the build still succeeds and the package falls back to
formulakit._speedups_fallback at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    # Compilation failures must not make the sdist uninstallable.
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building the compiled kernel failed ({exc}); "
                  f"formulakit will use the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} failed to compile ({exc}); "
                  f"formulakit will use the pure-Python fallback")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("formulakit._speedups", ["src/formulakit/_speedups.pyx"])],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
