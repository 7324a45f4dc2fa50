"""Process-wide numeric settings.

``QCL_TOLERANCE`` overrides the comparison tolerance and ``QCL_TRUNC`` the
default qnat truncation, both read once at import time.
"""
import os

_tolerance = float(os.environ.get("QCL_TOLERANCE", "1e-9"))
DEFAULT_QNAT_DIM = int(os.environ.get("QCL_TRUNC", "16"))
MAX_DIM = 4096


def eps():
    return _tolerance


def set_tolerance(value):
    global _tolerance
    if not value > 0:
        raise ValueError("tolerance must be positive")
    _tolerance = float(value)
