"""Numba acceleration switch.

Hot numeric kernels are decorated with :func:`maybe_njit`.  By default they
are compiled with numba's ``@njit``; setting the environment variable
``CARTPOLE_LAB_NUMBA=0`` before import selects a pure-Python/numpy fallback
(the undecorated functions), which is handy for debugging and for the
benchmark in ``benchmarks/``.

Both paths execute the same source with the same operation order and no
fastmath, so results are bit-identical.
"""

import os

_flag = os.environ.get("CARTPOLE_LAB_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _flag not in ("0", "false", "no", "off")

if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False


def maybe_njit(func):
    """Apply ``@njit(cache=True)`` when numba acceleration is enabled."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func
