"""Kernel backend selection: numba-jitted hot loops with a pure-numpy fallback.

The backend is chosen once at import time from the ``EVIFUSE_BACKEND``
environment variable:

* ``numba`` -- require numba, fail loudly if it is missing;
* ``numpy`` -- force the pure-numpy/pure-Python fallback path;
* unset / ``auto`` -- use numba when importable, fall back otherwise.

Only genuinely hot inner loops go through this module (element-wise special
functions and Monte-Carlo reductions); everything else is ordinary
vectorized numpy and does not need a backend switch.
"""

import os

_choice = os.environ.get("EVIFUSE_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"EVIFUSE_BACKEND must be 'numba', 'numpy' or 'auto', got {_choice!r}"
    )

USING_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        import numba as _numba

        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        _numba = None
else:
    _numba = None


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"


def njit(fn):
    """JIT-compile ``fn`` when numba is active, otherwise return it unchanged."""
    if USING_NUMBA:
        return _numba.njit(fn, cache=True)
    return fn


def vectorize_f64(fn):
    """Turn a float64->float64 scalar kernel into a ufunc-like callable.

    With numba active this builds a true compiled ufunc.  The fallback wraps
    the same scalar function with ``np.frompyfunc`` so both paths share one
    implementation of the algorithm.
    """
    import numpy as np

    if USING_NUMBA:
        return _numba.vectorize(["float64(float64)"], nopython=True, cache=True)(fn)

    raw = np.frompyfunc(fn, 1, 1)

    def wrapped(x):
        out = raw(np.asarray(x, dtype=np.float64))
        return out.astype(np.float64) if isinstance(out, np.ndarray) else float(out)

    wrapped.scalar = fn
    return wrapped
