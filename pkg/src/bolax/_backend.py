"""Kernel backend selection.

Hot kernels exist twice: a numba ``@njit`` version and a pure-numpy version.
The active backend is chosen at import from ``BOLAX_PURE_NUMPY`` (set to
``1`` to disable JIT) and can be switched at runtime with :func:`set_backend`.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

_TRUTHY = {"1", "true", "yes", "on"}

_state = {
    "backend": (
        "numpy"
        if (not HAVE_NUMBA or os.environ.get("BOLAX_PURE_NUMPY", "").lower() in _TRUTHY)
        else "numba"
    )
}


def jit(fn):
    """``numba.njit`` with caching and GIL release, or the identity."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def get_backend():
    return _state["backend"]


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev = _state["backend"]
    _state["backend"] = name
    return prev


def thread_budget(default=None):
    """Worker count for per-disc parallel work (``BOLAX_THREADS`` overrides)."""
    env = os.environ.get("BOLAX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    if default is not None:
        return max(1, int(default))
    return os.cpu_count() or 1
