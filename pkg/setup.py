from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "nvspin._kernels._core",
    sources=["src/nvspin/_kernels/_core.pyx"],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
