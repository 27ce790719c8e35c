"""Backend selection: compiled Cython kernel when importable, numpy otherwise.

Set ``QGATE_FORCE_PYTHON=1`` to force the numpy fallback (used by the
benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("QGATE_FORCE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py


def backend_name() -> str:
    return _impl.BACKEND_NAME


def propagate(h_stack, dts, u0):
    """Ordered product of step exponentials applied to u0 (see kernels)."""
    return _impl.propagate(h_stack, dts, u0)
