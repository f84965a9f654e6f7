"""Uplink massive-MIMO receiver with low-resolution ADCs.

NR type 1 DMRS, exponential-PDP channels, 2x1D MMSE channel estimation,
Sequential DCD with bound vs. MMSE detection, and a gate-count model.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
