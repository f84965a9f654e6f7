"""Backend selection for the DCD hot loop.

The compiled ``_dcd_ext`` kernel is used when it imports; otherwise the pure
Python kernel is used. Setting ``DCDMIMO_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _dcd_py

dcd_bound_batch_py = _dcd_py.dcd_bound_batch

try:
    if os.environ.get("DCDMIMO_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from ._dcd_ext import dcd_bound_batch as dcd_bound_batch_ext
except ImportError:
    dcd_bound_batch_ext = None

if dcd_bound_batch_ext is not None:
    dcd_bound_batch = dcd_bound_batch_ext
    BACKEND = "cython"
else:
    dcd_bound_batch = dcd_bound_batch_py
    BACKEND = "python"

__all__ = ["BACKEND", "dcd_bound_batch", "dcd_bound_batch_py", "dcd_bound_batch_ext"]
