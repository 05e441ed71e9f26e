"""Hot numeric kernels with a compiled core and a pure-numpy fallback.

The implementation is chosen once at import time: the Cython extension when
it was built, otherwise the numpy fallback.  Setting the environment
variable ``SCANFIT_PURE_PYTHON`` to a non-empty value forces the fallback
even when the extension is available, for testing and benchmarking.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("SCANFIT_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND: str = _impl.BACKEND

KIND_REAL = _fallback.KIND_REAL
KIND_PAIR_FIRST = _fallback.KIND_PAIR_FIRST
KIND_PAIR_SECOND = _fallback.KIND_PAIR_SECOND

rational_eval = _impl.rational_eval
partial_fraction_basis = _impl.partial_fraction_basis
affine_propagate = _impl.affine_propagate

__all__ = [
    "BACKEND",
    "KIND_REAL",
    "KIND_PAIR_FIRST",
    "KIND_PAIR_SECOND",
    "rational_eval",
    "partial_fraction_basis",
    "affine_propagate",
]
