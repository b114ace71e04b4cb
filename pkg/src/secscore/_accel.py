"""Backend selection for the numeric kernels.

Set ``SECSCORE_DISABLE_NUMBA=1`` to force the pure-numpy path even when
numba is installed.
"""

import os

_FLAG = os.environ.get("SECSCORE_DISABLE_NUMBA", "").strip().lower()

try:
    if _FLAG in ("1", "true", "yes", "on"):
        raise ImportError("numba disabled by SECSCORE_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"
