"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``PQLAB_PURE`` is set to a non-empty value, the numpy
implementation is used.  ``BACKEND`` names the active one.
"""
import os

from . import _kernels_py

if os.environ.get("PQLAB_PURE"):
    _impl = _kernels_py
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "numpy"

kernel_sums = _impl.kernel_sums

__all__ = ["kernel_sums", "BACKEND"]
