"""Backend switch for the hot kernels.

``MOMENTEQ_BACKEND=numpy`` forces the vectorized numpy fallbacks; anything else
(or unset) uses numba when it can be imported. ``MOMENTEQ_THREADS`` caps the
numba thread pool.
"""
import os

_requested = os.environ.get("MOMENTEQ_BACKEND", "numba").strip().lower()

try:
    if _requested == "numpy":
        raise ImportError("numba disabled by MOMENTEQ_BACKEND")
    import numba as _numba
    from numba import njit as _njit

    BACKEND = "numba"
except ImportError:
    _numba = None
    _njit = None
    BACKEND = "numpy"

if _numba is not None and os.environ.get("MOMENTEQ_THREADS"):
    _numba.set_num_threads(int(os.environ["MOMENTEQ_THREADS"]))


def jit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is active, identity otherwise."""
    kwargs.setdefault("cache", True)

    def wrap(f):
        if _njit is None:
            return f
        return _njit(**kwargs)(f)

    if func is None:
        return wrap
    return wrap(func)


def use_numba():
    return BACKEND == "numba"
