"""Hot loops with a compiled backend and a pure-Python fallback.

The compiled module is used when it was built and ``EMLAB_PURE_PYTHON`` is
unset or ``0``.  ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _pykernels

_py = _pykernels
_c = None
if os.environ.get("EMLAB_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _ckernels as _c
    except ImportError:
        _c = None

BACKEND = "cython" if _c is not None else "python"


def _impl(backend):
    if backend is None:
        return _c if _c is not None else _py
    if backend == "python":
        return _py
    if backend == "cython":
        if _c is None:
            raise RuntimeError("compiled kernels are not available")
        return _c
    raise ValueError(f"unknown backend {backend!r}")


def compiled_available() -> bool:
    return _c is not None


def bump_gradient_integrals(tris, box, degree, nodes, weights, backend=None):
    """Integrals of the bump gradient over each triangle, shape (N, 2)."""
    tris = np.ascontiguousarray(tris, dtype=float).reshape(-1, 3, 2)
    out = np.zeros((tris.shape[0], 2))
    _impl(backend).bump_gradient_integrals(
        tris,
        np.ascontiguousarray(box, dtype=float),
        int(degree),
        np.ascontiguousarray(nodes, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        out,
    )
    return out


def singular_values_2x2(grads, backend=None):
    """Descending singular values of each 2x2 matrix, shape (N, 2)."""
    grads = np.ascontiguousarray(grads, dtype=float).reshape(-1, 2, 2)
    out = np.zeros((grads.shape[0], 2))
    _impl(backend).singular_values_2x2(grads, out)
    return out
