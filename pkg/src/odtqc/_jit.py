"""Numba switch.

Hot loops are written once in plain Python and compiled with ``numba.njit``
when available. Setting ``ODTQC_DISABLE_JIT=1`` forces the pure Python /
numpy fallbacks, which must give identical results.
"""
import os

_DISABLED = os.environ.get("ODTQC_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes")

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(func):
    """Compile ``func`` in nopython mode, or return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return _numba.njit(cache=True)(func)


def set_threads(n):
    if HAVE_NUMBA and n:
        _numba.set_num_threads(max(1, min(int(n), _numba.config.NUMBA_NUM_THREADS)))
