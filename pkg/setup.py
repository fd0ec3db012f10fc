import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure-Python
# implementations in tickfolio._kernels._pykernels when the extension is absent.
extensions = [
    Extension(
        "tickfolio._kernels._cykernels",
        ["src/tickfolio/_kernels/_cykernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
