"""Optional numba acceleration.

Kernels in :mod:`ridgeless._kernels` exist in two forms: explicit loops that
numba compiles, and numpy-vectorised equivalents.  The compiled path is used
when numba imports and ``RRL_DISABLE_JIT`` is unset (or ``0``).
"""
import os

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    NUMBA_AVAILABLE = False

_flag = os.environ.get("RRL_DISABLE_JIT", "").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _flag not in ("1", "true", "yes", "on")


def jit(fn):
    """Compile ``fn`` with numba when it is importable, else return it as is."""
    if NUMBA_AVAILABLE:
        return _njit(cache=True)(fn)
    return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"
