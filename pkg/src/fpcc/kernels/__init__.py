"""Kernel backends for the hot inner loops.

Two interchangeable implementations exist: ``numba`` (JIT-compiled,
parallel over rows/points) and ``numpy`` (pure vectorized fallback).
Selection order: an active :func:`use_backend` override, then the
``FPCC_BACKEND`` environment variable (``auto`` | ``numba`` | ``numpy``),
then numba whenever it imported cleanly.

Both backends produce results that do not depend on the worker thread
count: parallel regions only write disjoint outputs and every reduction
runs in index order.
"""

import os
from contextlib import contextmanager

from ..errors import InvalidInputError
from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}

try:
    from . import numba_backend

    _BACKENDS["numba"] = numba_backend
except ImportError:
    numba_backend = None

_override = None


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Resolve a backend module by explicit name, override, or env flag."""
    if name is None:
        name = _override or os.environ.get("FPCC_BACKEND", "auto").lower()
    if name == "auto":
        name = "numba" if "numba" in _BACKENDS else "numpy"
    try:
        return _BACKENDS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown kernel backend {name!r}; expected one of: auto, numba, numpy"
        ) from None


@contextmanager
def use_backend(name):
    """Temporarily force a backend, e.g. while benchmarking the fallback."""
    global _override
    get_backend(name)  # validate before entering
    previous = _override
    _override = name
    try:
        yield
    finally:
        _override = previous


def set_threads(count):
    """Cap worker threads for the numba backend.

    The numpy backend is single-threaded by construction, so this only
    affects numba. Counts above the launch-time maximum are clamped.
    """
    count = int(count)
    if count < 1:
        raise InvalidInputError("thread count must be >= 1")
    if numba_backend is not None:
        numba_backend.set_threads(count)
