"""Build script: compiles the optional Cython kernels when Cython is present."""
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # pure-Python install; pmt.kernels falls back
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("pmt._kernels", ["src/pmt/_kernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
