# Builds the optional compiled kernels. The package is fully functional
# without them (a NumPy fallback is selected at import time), so a missing
# compiler or Cython only costs speed:
#
#   python setup.py build_ext --inplace
#
from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Skip the extension instead of failing the whole install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernels ({exc}); "
                  "falling back to the pure NumPy implementation")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "falling back to the pure NumPy implementation")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/hestonswitch/_kernels/_core.pyx",
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
