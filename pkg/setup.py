from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "hlcompete._ckernel",
                ["src/hlcompete/_ckernel.pyx"],
                # no FMA contraction: the compiled loop must match the Python one bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
