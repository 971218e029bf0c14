"""Backend selection for the numeric kernels.

Set ``CSSTACK_NUMBA=0`` in the environment before import to force the
pure-numpy code paths (useful for debugging and on platforms without numba).
"""

import os

_FLAG = os.environ.get("CSSTACK_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    The compiled kernels are always defined (so the benchmark can compare
    both paths); ``USE_NUMBA`` only decides which one the dispatchers call.
    """
    if NUMBA_AVAILABLE:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
