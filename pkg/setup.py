import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the flow package falls back to numpy kernels
    cythonize = None


def extensions():
    if cythonize is None or os.environ.get("NILFLOW_NO_EXT"):
        return []
    flags = ["-O3"]
    link = []
    if not os.environ.get("NILFLOW_NO_OPENMP"):
        flags.append("-fopenmp")
        link.append("-fopenmp")
    ext = Extension(
        "nilflow.flow._ckernels",
        ["src/nilflow/flow/_ckernels.pyx"],
        extra_compile_args=flags,
        extra_link_args=link,
        optional=True,
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
