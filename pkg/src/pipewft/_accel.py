"""Optional numba acceleration.

Hot scalar kernels are decorated with :func:`njit`.  When numba is missing,
or when ``PIPEWFT_DISABLE_NUMBA`` is set to a truthy value, the decorator
returns the plain Python function, so the same source serves as the
pure-numpy fallback.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _flag_set(name):
    return os.environ.get(name, "").strip().lower() not in _FALSY


def _numba_available():
    if _flag_set("PIPEWFT_DISABLE_NUMBA"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


HAVE_NUMBA = _numba_available()


def _dummy_jit(*args, **kwargs):
    """Identity decorator used in place of ``numba.njit``."""

    def wrapper(f):
        return f

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper


if HAVE_NUMBA:
    import numba

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        if len(args) == 1 and callable(args[0]):
            return numba.njit(**kwargs)(args[0])
        return numba.njit(*args, **kwargs)

else:
    njit = _dummy_jit


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"python"``."""
    if HAVE_NUMBA and not _flag_set("NUMBA_DISABLE_JIT"):
        return "numba"
    return "python"


def py_func(f):
    """Return the uncompiled Python implementation behind a kernel."""
    return getattr(f, "py_func", f)
