"""Numba switch.

Hot kernels come in two flavours: a loop version compiled with
``numba.njit`` and a numpy (or scipy) fallback. The compiled path is used
unless numba is missing or ``DIFFSAMPLE_DISABLE_NUMBA`` is set to a truthy
value. Both flavours stay importable so they can be benchmarked side by side.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def _flag_disabled():
    return os.environ.get("DIFFSAMPLE_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
        "on",
    )


USE_NUMBA = HAVE_NUMBA and not _flag_disabled()


def njit(func):
    """Compile with numba if it is installed; otherwise leave as plain Python."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func  # pragma: no cover


def pick(compiled, fallback):
    """Return the kernel selected by the active backend."""
    return compiled if USE_NUMBA else fallback


def backend():
    return "numba" if USE_NUMBA else "numpy"
