"""Build the optional compiled attention kernel.

The package works without it (a numpy fallback is selected at import),
so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("fedhin.model._node_kernel",
                   ["src/fedhin/model/_node_kernel.pyx"])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
