"""Kernel backend selection.

The compiled extension is used when it imports; setting
``MPLOBPCG_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("MPLOBPCG_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

COMPILED = kernels is not _kernels_py
NAME = "cython" if COMPILED else "python"
