"""The two control Hamiltonian families driving the gate protocols.

Conventions (fixed once, used everywhere):

* basis order ``(|0>, |1>)`` with ``sigma_z|0> = +|0>``,
* ``sigma_+ = |0><1|``, so a positive detuning raises ``|0>``,
* two-qubit basis order ``(|00>, |01>, |10>, |11>)``, first qubit is the
  slow index.

Single-qubit family::

    h1 = (delta/2) sz + (omega/2) (s+ e^{i phi} + s- e^{-i phi})

Two-qubit family::

    h2 = delta_t |11><11| + (omega_t/2) I (x) (s+ e^{i phi} + s- e^{-i phi})
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import Operator

__all__ = [
    "QubitParams",
    "TwoQubitParams",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "h1",
    "h2",
    "h1_stack",
    "h2_stack",
    "PolarQubitBuilder",
    "XZQubitBuilder",
    "XZTwoQubitBuilder",
    "builder_for_path",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True)
class QubitParams:
    """Instantaneous single-qubit controls: detuning, drive strength, drive phase."""

    delta: float
    omega: float
    phi: float

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0; flip the sign through phi -> phi + pi")


@dataclass(frozen=True)
class TwoQubitParams:
    """Instantaneous two-qubit controls: conditional shift, drive strength, phase."""

    delta_t: float
    omega_t: float
    phi: float

    def __post_init__(self):
        if self.omega_t < 0:
            raise ValueError("omega_t must be >= 0; flip the sign through phi -> phi + pi")


def h1(p: QubitParams) -> Operator:
    """Single-qubit Hamiltonian for the given instantaneous parameters."""
    off = 0.5 * p.omega * np.exp(1j * p.phi)
    return Operator(np.array([[0.5 * p.delta, off], [np.conj(off), -0.5 * p.delta]]))


def h2(p: TwoQubitParams) -> Operator:
    """Two-qubit Hamiltonian: conditional |11> shift plus a drive on qubit 2."""
    mat = np.zeros((4, 4), dtype=np.complex128)
    mat[3, 3] = p.delta_t
    off = 0.5 * p.omega_t * np.exp(1j * p.phi)
    drive = np.array([[0, off], [np.conj(off), 0]])
    mat += np.kron(np.eye(2), drive)
    return Operator(mat)


def h1_stack(deltas, omegas, phis) -> np.ndarray:
    """Vectorized h1: arrays of shape (n,) -> Hamiltonian stack (n, 2, 2)."""
    deltas = np.asarray(deltas, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    n = deltas.shape[0]
    out = np.zeros((n, 2, 2), dtype=np.complex128)
    off = 0.5 * omegas * np.exp(1j * phis)
    out[:, 0, 0] = 0.5 * deltas
    out[:, 1, 1] = -0.5 * deltas
    out[:, 0, 1] = off
    out[:, 1, 0] = np.conj(off)
    return out


def h2_stack(delta_ts, omega_ts, phis) -> np.ndarray:
    """Vectorized h2: arrays of shape (n,) -> Hamiltonian stack (n, 4, 4)."""
    delta_ts = np.asarray(delta_ts, dtype=float)
    omega_ts = np.asarray(omega_ts, dtype=float)
    phis = np.asarray(phis, dtype=float)
    n = delta_ts.shape[0]
    out = np.zeros((n, 4, 4), dtype=np.complex128)
    off = 0.5 * omega_ts * np.exp(1j * phis)
    out[:, 3, 3] = delta_ts
    for block in (0, 2):
        out[:, block, block + 1] = off
        out[:, block + 1, block] = np.conj(off)
    return out


# ---------------------------------------------------------------------------
# path-to-Hamiltonian adapters for the propagator
# ---------------------------------------------------------------------------

class PolarQubitBuilder:
    """(omega, phi) trajectory values -> h1 with zero detuning."""

    dim = 2
    model = "h1_polar"

    def build_stack(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(values)
        return h1_stack(np.zeros(values.shape[0]), values[:, 0], values[:, 1])


class XZQubitBuilder:
    """(delta, omega_x) trajectory values -> h1 with phi in {0, pi}."""

    dim = 2
    model = "h1_xz"

    def build_stack(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(values)
        n = values.shape[0]
        out = np.zeros((n, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = 0.5 * values[:, 0]
        out[:, 1, 1] = -0.5 * values[:, 0]
        out[:, 0, 1] = 0.5 * values[:, 1]
        out[:, 1, 0] = 0.5 * values[:, 1]
        return out


class XZTwoQubitBuilder:
    """(delta_t, omega_x_t) trajectory values -> h2 with phi in {0, pi}."""

    dim = 4
    model = "h2_xz"

    def build_stack(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(values)
        n = values.shape[0]
        out = np.zeros((n, 4, 4), dtype=np.complex128)
        out[:, 3, 3] = values[:, 0]
        for block in (0, 2):
            out[:, block, block + 1] = 0.5 * values[:, 1]
            out[:, block + 1, block] = 0.5 * values[:, 1]
        return out


_BUILDERS = {
    "h1_polar": PolarQubitBuilder,
    "h1_xz": XZQubitBuilder,
    "h2_xz": XZTwoQubitBuilder,
}


def builder_for_path(path) -> "PolarQubitBuilder | XZQubitBuilder | XZTwoQubitBuilder":
    """The Hamiltonian builder matching a trajectory's declared model."""
    model = path.meta.get("model")
    try:
        return _BUILDERS[model]()
    except KeyError:
        raise ValueError(f"no Hamiltonian builder for model {model!r}") from None
