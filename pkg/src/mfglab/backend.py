"""Selection of the stencil-kernel backend.

The hot per-time-step kernels exist twice: numba-compiled loops and a pure
numpy fallback. The environment variable ``MFGLAB_BACKEND`` picks one at
import time:

``auto``
    use numba when importable, fall back to numpy otherwise (default)
``numba``
    require the compiled kernels, raise if numba is unavailable
``numpy``
    force the fallback

:func:`set_backend` switches at runtime (used by tests and the benchmark).
Both backends produce identical IEEE arithmetic, so results do not depend on
the choice beyond speed.
"""

from __future__ import annotations

import logging
import os

from . import kernels_numpy

log = logging.getLogger(__name__)

_VALID = ("auto", "numba", "numpy")
_active = kernels_numpy


def _load(name: str):
    if name == "numpy":
        return kernels_numpy
    if name == "numba":
        from . import kernels_numba

        return kernels_numba
    raise ValueError(f"unknown backend {name!r}, expected one of {_VALID}")


def set_backend(name: str) -> str:
    """Activate a backend by name ('auto', 'numba' or 'numpy').

    Returns the name of the backend actually activated.
    """
    global _active
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}, expected one of {_VALID}")
    if name == "auto":
        try:
            _active = _load("numba")
        except ImportError:
            log.info("numba unavailable, stencil kernels fall back to numpy")
            _active = kernels_numpy
    else:
        _active = _load(name)
    return _active.NAME


def active_backend() -> str:
    """Name of the backend currently in use."""
    return _active.NAME


def kernels():
    """The active kernel module."""
    return _active


def warm_up() -> None:
    """Trigger compilation of every kernel on tiny inputs.

    No-op under the numpy backend. Call before timing anything.
    """
    import numpy as np

    k = _active
    f1 = np.zeros(8)
    f2 = np.zeros((8, 8))
    v1 = np.zeros((1, 8))
    v2 = np.zeros((2, 8, 8))
    k.gradient_1d(f1, 0.125)
    k.gradient_2d(f2, 0.125)
    k.laplacian_1d(f1, 0.125)
    k.laplacian_2d(f2, 0.125)
    k.divergence_faces_1d(v1, 0.125)
    k.divergence_faces_2d(v2, 0.125)
    k.upwind_divergence_1d(f1, v1, 0.125)
    k.upwind_divergence_2d(f2, v2, 0.125)
    k.central_divergence_1d(f1, v1, 0.125)
    k.central_divergence_2d(f2, v2, 0.125)


set_backend(os.environ.get("MFGLAB_BACKEND", "auto").lower())
