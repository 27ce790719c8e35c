"""Pure-numpy propagation kernel (fallback backend).

Same contract as the compiled extension ``qgate._kernels``: given a stack
of Hermitian matrices and per-step durations, left-multiply the ordered
product of step exponentials onto an initial matrix. Batched ``eigh`` keeps
this reasonably fast; the compiled kernel is preferred when available.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def propagate(h_stack: np.ndarray, dts: np.ndarray, u0: np.ndarray) -> np.ndarray:
    """Return U = exp(-i h_{n-1} dt_{n-1}) ... exp(-i h_0 dt_0) @ u0."""
    h_stack = np.ascontiguousarray(h_stack, dtype=np.complex128)
    dts = np.ascontiguousarray(dts, dtype=np.float64)
    if h_stack.ndim != 3 or h_stack.shape[1] != h_stack.shape[2]:
        raise ValueError("h_stack must have shape (n, d, d)")
    if dts.shape != (h_stack.shape[0],):
        raise ValueError("dts must have one entry per step")
    w, v = np.linalg.eigh(h_stack)
    phases = np.exp(-1j * w * dts[:, None])
    steps = (v * phases[:, None, :]) @ v.conj().swapaxes(1, 2)
    u = np.array(u0, dtype=np.complex128)
    for k in range(steps.shape[0]):
        u = steps[k] @ u
    return u
