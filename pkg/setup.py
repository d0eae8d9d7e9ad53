from setuptools import Extension, setup

# The compiled packing kernel is optional: streambin.binpack falls back to
# the pure-Python kernel when the extension is missing.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "streambin.binpack._ffcore",
                sources=["src/streambin/binpack/_ffcore.pyx"],
            )
        ],
        compiler_directives={"language_level": "3", "embedsignature": True},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
