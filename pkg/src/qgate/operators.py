"""Dense complex operator algebra.

Small Hilbert spaces only (dim up to a few hundred): everything is a dense
``complex128`` matrix and eigen-decompositions are exact LAPACK calls. The
one non-standard piece is :func:`eigensystem`'s gauge fixing, which keeps
eigenvector phases (and labels) continuous along a parameter sweep so that
geometric phases can be integrated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Operator",
    "Spectrum",
    "OperatorError",
    "tensor",
    "unitary_exp",
    "eigensystem",
]

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-9
DEGENERACY_TOL = 1e-12


class OperatorError(ValueError):
    """Raised for malformed operands (wrong shape, broken flags, ...)."""


@dataclass(frozen=True)
class Operator:
    """Immutable dense complex square matrix.

    Parameters
    ----------
    entries:
        Square array-like; copied and frozen on construction.
    """

    entries: np.ndarray

    def __init__(self, entries):
        mat = np.array(entries, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise OperatorError(f"operator must be square, got shape {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self.entries

    def dagger(self) -> "Operator":
        return Operator(self.entries.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dim != other.dim:
            raise OperatorError(f"dim mismatch: {self.dim} vs {other.dim}")
        return Operator(self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.entries - other.entries)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.entries * scalar)

    __rmul__ = __mul__

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def unitarity_defect(self) -> float:
        eye = np.eye(self.dim)
        return float(np.max(np.abs(self.entries.conj().T @ self.entries - eye)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries), initial=0.0)))
        return self.hermiticity_defect() <= tol * scale

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        return self.unitarity_defect() <= tol

    @staticmethod
    def identity(dim: int) -> "Operator":
        return Operator(np.eye(dim))


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a Hermitian operator.

    ``vectors[:, k]`` is the (unit-norm) eigenvector for ``values[k]``;
    values are ascending unless label tracking against ``gauge_ref``
    reordered them to follow the reference branches. ``degenerate`` is set
    when levels are too close to fix phases without a reference.
    ``min_match_overlap`` is the worst |<ref|vec>| seen while matching
    against a gauge reference (1.0 when no reference was given).
    """

    values: np.ndarray
    vectors: np.ndarray
    degenerate: bool = False
    min_match_overlap: float = 1.0

    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", self.values.shape[0])


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the first factor is the slow (most significant) index."""
    return Operator(np.kron(a.matrix, b.matrix))


def _check_hermitian(h: Operator) -> np.ndarray:
    if not h.is_hermitian():
        raise OperatorError(
            f"expected a Hermitian operator (defect {h.hermiticity_defect():.2e})")
    return h.matrix


def unitary_exp(h: Operator, t: float) -> Operator:
    """exp(-i h t) for Hermitian h, via spectral decomposition (hbar = 1)."""
    mat = _check_hermitian(h)
    w, v = np.linalg.eigh(mat)
    return Operator((v * np.exp(-1j * w * t)) @ v.conj().T)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry real and positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(lead) > 0, lead / np.abs(np.where(lead == 0, 1, lead)), 1.0)
    return vectors / phases


def _match_to_reference(w, v, ref_vectors):
    """Reorder (w, v) columns so column k has maximal overlap with ref column k.

    Greedy assignment on |<ref_i|v_j>|, largest overlaps first. Returns the
    permuted values/vectors and the smallest matched overlap.
    """
    overlap = np.abs(ref_vectors.conj().T @ v)
    n = overlap.shape[0]
    order = np.full(n, -1)
    taken_ref = np.zeros(n, dtype=bool)
    taken_new = np.zeros(n, dtype=bool)
    flat = np.argsort(overlap, axis=None)[::-1]
    assigned = 0
    min_overlap = 1.0
    for f in flat:
        i, j = divmod(int(f), n)
        if taken_ref[i] or taken_new[j]:
            continue
        order[i] = j
        taken_ref[i] = taken_new[j] = True
        min_overlap = min(min_overlap, float(overlap[i, j]))
        assigned += 1
        if assigned == n:
            break
    return w[order], v[:, order], min_overlap


def eigensystem(h: Operator, gauge_ref: Spectrum | None = None) -> Spectrum:
    """Eigen-decomposition with deterministic, gauge-continuous eigenvectors.

    Without ``gauge_ref``: ascending eigenvalues, each vector's leading
    entry made real-positive; exact ties broken lexicographically. Nearly
    degenerate levels flag the result as ``degenerate``.

    With ``gauge_ref``: columns are first label-matched to the reference by
    maximal overlap (so branches keep their identity across parameter steps
    and sudden jumps), then each phase is fixed so the overlap with its
    reference vector is real and positive.
    """
    mat = _check_hermitian(h)
    w, v = np.linalg.eigh(mat)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    gaps = np.diff(w)
    degenerate = bool(gaps.size and np.min(gaps) <= DEGENERACY_TOL * scale)

    if gauge_ref is None:
        v = _fix_phases(v)
        if degenerate:
            # stable deterministic order inside degenerate clusters
            keys = [tuple(np.round(v[:, k], 9).view(float)) for k in range(len(w))]
            order = sorted(range(len(w)), key=lambda k: (round(w[k] / scale, 12), keys[k]))
            w, v = w[order], v[:, order]
        return Spectrum(w, v, degenerate=degenerate)

    w, v, min_ov = _match_to_reference(w, v, gauge_ref.vectors)
    ov = np.sum(gauge_ref.vectors.conj() * v, axis=0)
    phases = np.where(np.abs(ov) > 0, ov / np.abs(np.where(ov == 0, 1, ov)), 1.0)
    v = v / phases
    return Spectrum(w, v, degenerate=degenerate, min_match_overlap=min_ov)
