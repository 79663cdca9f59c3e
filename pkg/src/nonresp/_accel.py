"""Optional numba acceleration.

Hot kernels are written once as explicit loops and compiled with ``njit``.
Setting ``NONRESP_NO_NUMBA=1`` (or running without numba) selects the
pure-numpy path instead: a vectorised twin when the kernel declares one,
otherwise the loop source run by the interpreter. All paths must agree
bit for bit. Kernels must be self-contained (no calls into other kernels).
"""
import functools
import os

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("NONRESP_NO_NUMBA", "").strip().lower() not in {
    "1", "true", "yes", "on",
}


@functools.lru_cache(maxsize=None)
def _compile(func):
    return _numba.njit(cache=True)(func)


def jit(func=None, *, numpy_twin=None):
    """Decorate a loop kernel; ``numpy_twin`` is the vectorised fallback."""
    if func is None:
        return functools.partial(jit, numpy_twin=numpy_twin)
    chosen = _compile(func) if USE_NUMBA else (numpy_twin or func)
    if not USE_NUMBA:
        # plain functions accept attributes; keep the sources reachable
        chosen = functools.wraps(chosen)(lambda *a, _f=chosen: _f(*a))
    chosen.loop_func = func
    chosen.numpy_twin = numpy_twin
    return chosen


def all_paths(kernel):
    """Every available implementation of ``kernel`` keyed by name."""
    paths = {"loop": kernel.loop_func}
    if kernel.numpy_twin is not None:
        paths["numpy"] = kernel.numpy_twin
    if HAVE_NUMBA:
        paths["numba"] = _compile(kernel.loop_func)
    return paths
