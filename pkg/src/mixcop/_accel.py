"""Backend selection for the hot numeric kernels.

Numba is used when importable unless ``MIXCOP_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel dispatches to its vectorized numpy
twin. The backend can also be switched at runtime with :func:`use_backend`,
which is what the benchmark script does.
"""
import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

_TRUTHY = {"1", "true", "yes", "on"}

HAVE_NUMBA = numba is not None
_backend = (
    "numba"
    if HAVE_NUMBA and os.environ.get("MIXCOP_DISABLE_NUMBA", "").lower() not in _TRUTHY
    else "numpy"
)


def njit(func=None, **kwargs):
    """``numba.njit`` with project defaults; identity when numba is missing."""
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**opts)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
