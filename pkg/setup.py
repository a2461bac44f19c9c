from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "tbverdet._moments",
        ["src/tbverdet/_moments.pyx"],
        extra_compile_args=["-O3", "-fcx-limited-range"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
