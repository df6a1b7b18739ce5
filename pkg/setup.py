import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("OTFSYNTH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "otfsynth._kernel",
                    ["src/otfsynth/_kernel.pyx"],
                    language="c++",
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
