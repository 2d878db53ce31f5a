"""Selection between numba-compiled kernels and pure-numpy fallbacks.

The compiled path is used when numba imports cleanly and neither
``PRECESSION_DISABLE_JIT`` nor ``NUMBA_DISABLE_JIT`` is set to a truthy value.
Both implementations of every hot kernel stay importable so they can be
compared against each other in tests and benchmarks.
"""

from __future__ import annotations

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in _TRUTHY


try:
    import numba as _numba

    HAVE_NUMBA = not _flag("NUMBA_DISABLE_JIT")
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and not _flag("PRECESSION_DISABLE_JIT")


def njit(fn):
    """Compile ``fn`` with numba when available, otherwise return it unchanged."""
    if HAVE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_JIT else "numpy"


def set_backend(name: str) -> None:
    """Switch the process-wide kernel backend ("numba" or "numpy")."""
    global USE_JIT
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    USE_JIT = name == "numba"


def thread_count() -> int:
    """Worker count for grid drivers, capped by ``PRECESSION_THREADS``."""
    raw = os.environ.get("PRECESSION_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"PRECESSION_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(8, os.cpu_count() or 1))
