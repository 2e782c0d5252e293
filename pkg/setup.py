from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; _backend falls back at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "duelfuel._ckernel",
                ["src/duelfuel/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
