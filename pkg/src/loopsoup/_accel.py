"""Switch between numba-compiled kernels and the plain Python fallback.

Set ``LOOPSOUP_NO_NUMBA=1`` before import to run every kernel as ordinary
Python.  Both paths consume the numpy ``Generator`` in the same order, so a
seeded run gives identical output either way.
"""
import os

FLAG = "LOOPSOUP_NO_NUMBA"


def _disabled():
    return os.environ.get(FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and not _disabled()


def jit(fn):
    """njit with on-disk caching, or the identity when disabled."""
    if USE_NUMBA:
        return _numba.njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if USE_NUMBA else "python"
