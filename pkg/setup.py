"""Build script: compiles the optional branch-and-bound kernel.

The extension is a pure speedup; if Cython or a C compiler is missing the
package installs anyway and falls back to the Python implementation in
``pmbatch.engine``.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing: fall back to pure Python
            print(f"warning: building pmbatch._kernel failed ({exc}); "
                  "using the pure-Python engine")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "using the pure-Python engine")


def extensions():
    import os
    if not os.path.exists("src/pmbatch/_kernel.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("pmbatch._kernel", ["src/pmbatch/_kernel.pyx"])],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
