import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

# The extension compiles the whole core directly; no pre-built library needed.
ext = Pybind11Extension(
    "vtdlib._core",
    sorted(glob.glob("src/*.cpp")) + ["bindings/pymodule.cpp"],
    include_dirs=["include", "vendor"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
