"""Hot numeric kernels: monomial evaluation, batched conjugates, grid search.

The numba backend is used when numba imports cleanly. Setting the environment
variable ``PROCURA_BACKEND=numpy`` (read once, at import) forces the pure-numpy
fallback; ``PROCURA_BACKEND=numba`` makes a missing numba an import error.
"""

import os
from types import ModuleType

from . import _numpy

CONVERGED = _numpy.CONVERGED
MAX_ITERS = _numpy.MAX_ITERS
DIVERGED = _numpy.DIVERGED
STALLED = _numpy.STALLED


def _load(name: str) -> ModuleType:
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r} (expected 'numba' or 'numpy')")


def get_backend(name: str) -> ModuleType:
    """Return the kernel module for ``name`` regardless of the active choice."""
    return _load(name)


_requested = os.environ.get("PROCURA_BACKEND", "").strip().lower()
if _requested:
    _impl = _load(_requested)
else:
    try:
        _impl = _load("numba")
    except ImportError:
        _impl = _numpy

BACKEND = "numba" if _impl is not _numpy else "numpy"

mono_eval = _impl.mono_eval
mono_grad = _impl.mono_grad
mono_hess = _impl.mono_hess
conjugate_batch = _impl.conjugate_batch
grid_enumerate = _impl.grid_enumerate

__all__ = [
    "BACKEND",
    "CONVERGED",
    "DIVERGED",
    "MAX_ITERS",
    "STALLED",
    "conjugate_batch",
    "get_backend",
    "grid_enumerate",
    "mono_eval",
    "mono_grad",
    "mono_hess",
]
