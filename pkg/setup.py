"""Build script: compiles the sieve kernel extension when Cython and a C
compiler are available.  The package works without the extension (a pure
numpy fallback is selected at import), so a failed extension build only
costs speed, not functionality."""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/divshift/_kernels/_csieve.pyx",
        compiler_directives={"language_level": 3},
        quiet=True,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"divshift: skipping compiled kernels ({exc!r}); "
          "pure-python fallback will be used")
    ext_modules = []

setup(ext_modules=ext_modules)
