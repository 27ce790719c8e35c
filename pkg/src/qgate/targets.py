"""Ideal gate definitions, the fidelity metric, and the CNOT assembly.

The fidelity used throughout is |Tr(U_ideal^dag U_real)|^2 / d^2, which is
invariant under a global phase of either argument, so no extra phase
convention is needed anywhere.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .hamiltonians import SIGMA_X, SIGMA_Y
from .operators import Operator

__all__ = [
    "GateTarget",
    "CnotSequence",
    "BlockStructureError",
    "ideal_phase",
    "ideal_hadamard_like",
    "ideal_cnot_like",
    "not_gate",
    "target_not",
    "fidelity",
    "gate_error",
    "compose_cnot",
    "extract_block_phase",
]


class BlockStructureError(ValueError):
    """Raised when an operand lacks the controlled block structure."""


@dataclass(frozen=True)
class GateTarget:
    """An ideal unitary to compare against (global-phase-invariant)."""

    unitary: Operator

    def __post_init__(self):
        if not self.unitary.is_unitary(1e-12):
            raise ValueError("gate target must be unitary to 1e-12")

    @property
    def dim(self) -> int:
        return self.unitary.dim


def ideal_phase(theta: float) -> GateTarget:
    """diag(e^{i theta/2}, e^{-i theta/2}): phase gate of angle theta."""
    return GateTarget(Operator(np.diag([
        cmath.exp(0.5j * theta), cmath.exp(-0.5j * theta)])))


def ideal_hadamard_like() -> GateTarget:
    """The rotation sending (|0>+|1>)/sqrt2 -> |0> and (|0>-|1>)/sqrt2 -> -|1>."""
    s = 1.0 / math.sqrt(2.0)
    return GateTarget(Operator(np.array([[s, s], [-s, s]])))


def ideal_cnot_like() -> GateTarget:
    """|0><0| (x) I + |1><1| (x) i sigma_y."""
    mat = np.zeros((4, 4), dtype=np.complex128)
    mat[:2, :2] = np.eye(2)
    mat[2:, 2:] = 1j * SIGMA_Y
    return GateTarget(Operator(mat))


def not_gate() -> Operator:
    """NOT on the first qubit: sigma_x (x) I."""
    return Operator(np.kron(SIGMA_X, np.eye(2)))


def target_not() -> Operator:
    """NOT on the second qubit: I (x) sigma_x (the echo frame for u3 runs)."""
    return Operator(np.kron(np.eye(2), SIGMA_X))


def fidelity(ideal: GateTarget, real: Operator) -> float:
    """|Tr(ideal^dag real)|^2 / d^2, clamped into [0, 1].

    The clamp only absorbs round-off overshoot (order of the operand's
    unitarity defect) on near-exact gates.
    """
    if ideal.dim != real.dim:
        raise ValueError(f"dimension mismatch: {ideal.dim} vs {real.dim}")
    tr = np.trace(ideal.unitary.matrix.conj().T @ real.matrix)
    return min(float(abs(tr) ** 2) / ideal.dim ** 2, 1.0)


def gate_error(ideal: GateTarget, real: Operator) -> float:
    """1 - fidelity."""
    return 1.0 - fidelity(ideal, real)


def extract_block_phase(u1: Operator, off_tol: float = 1e-3) -> float:
    """The controlled-block phase xi of a u1-type unitary.

    Reads arg(<10|u1|11>), which the i*sigma_y block structure guarantees
    to be the block phase. Rejects operands whose inter-block coupling
    exceeds ``off_tol``.
    """
    m = u1.matrix
    if u1.dim != 4:
        raise BlockStructureError("expected a two-qubit operator")
    off = max(float(np.max(np.abs(m[:2, 2:]))), float(np.max(np.abs(m[2:, :2]))))
    if off > off_tol:
        raise BlockStructureError(
            f"inter-block coupling {off:.2e} exceeds {off_tol:.0e}")
    return float(np.angle(m[2, 3]))


@dataclass(frozen=True)
class CnotSequence:
    """The assembled controlled-NOT: u2 @ u3 @ u2 @ u1, with xi from u1."""

    u1: Operator
    u2: Operator
    u3: Operator
    xi: float
    composed: Operator


def compose_cnot(u1: Operator, u2: Operator, u3: Operator) -> CnotSequence:
    """Assemble the controlled-NOT from its three propagated pieces.

    The unknown phase xi extracted from u1 is carried for reporting; the
    composition cancels it structurally (u3 phases both first-qubit-|1>
    states by the same xi, and the u2 sandwich moves that onto the |0>
    block), so the composed product equals the ideal gate up to a global
    phase whenever the pieces have matching xi.
    """
    if not (u1.dim == u2.dim == u3.dim == 4):
        raise ValueError("all operands must be two-qubit operators")
    xi = extract_block_phase(u1)
    composed = u2 @ u3 @ u2 @ u1
    return CnotSequence(u1, u2, u3, xi, composed)
