import numpy as np
import pytest

from qgate.hamiltonians import builder_for_path
from qgate.operators import Operator
from qgate.propagator import evolve, evolve_with_echo
from qgate.schedule import ScheduleLimits, cnot_u1_path, cnot_u3_path
from qgate.targets import (
    BlockStructureError,
    GateTarget,
    compose_cnot,
    extract_block_phase,
    fidelity,
    gate_error,
    ideal_cnot_like,
    ideal_hadamard_like,
    ideal_phase,
    not_gate,
    target_not,
)

ISY = np.array([[0, 1], [-1, 0]], dtype=complex)


def synthetic_u1(xi):
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = np.eye(2)
    m[2:, 2:] = np.exp(1j * xi) * ISY
    return Operator(m)


def synthetic_u3(xi):
    return Operator(np.diag([1, 1, np.exp(1j * xi), np.exp(1j * xi)]))


class TestIdealGates:
    def test_phase_zero_is_identity(self):
        assert np.allclose(ideal_phase(0.0).unitary.matrix, np.eye(2))

    def test_phase_pi_is_i_sigma_z(self):
        assert np.allclose(ideal_phase(np.pi).unitary.matrix, np.diag([1j, -1j]))

    def test_phase_quarter(self):
        expected = np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)])
        assert np.allclose(ideal_phase(np.pi / 2).unitary.matrix, expected)

    def test_hadamard_like_mappings(self):
        u = ideal_hadamard_like().unitary.matrix
        plus = np.array([1, 1]) / np.sqrt(2)
        minus = np.array([1, -1]) / np.sqrt(2)
        assert np.allclose(u @ plus, [1, 0], atol=1e-15)
        assert np.allclose(u @ minus, [0, -1], atol=1e-15)

    def test_hadamard_like_determinant(self):
        assert np.isclose(np.linalg.det(ideal_hadamard_like().unitary.matrix), 1.0)

    def test_cnot_like_columns(self):
        u = ideal_cnot_like().unitary.matrix
        assert np.allclose(u @ [1, 0, 0, 0], [1, 0, 0, 0])
        assert np.allclose(u @ [0, 0, 1, 0], [0, 0, 0, -1])  # |10> -> -|11>
        assert np.allclose(u @ [0, 0, 0, 1], [0, 0, 1, 0])   # |11> -> |10>

    def test_cnot_like_square(self):
        u = ideal_cnot_like().unitary
        expected = np.diag([1, 1, -1, -1]).astype(complex)  # (i sy)^2 = -I
        assert np.allclose((u @ u).matrix, expected)

    def test_not_gate(self):
        u = not_gate()
        assert np.allclose(u.matrix @ [1, 0, 0, 0], [0, 0, 1, 0])  # |00> -> |10>
        assert np.allclose((u @ u).matrix, np.eye(4))
        assert u.is_hermitian() and u.is_unitary()


class TestFidelity:
    def test_self_fidelity(self, rng):
        u = ideal_hadamard_like()
        assert fidelity(u, u.unitary) == pytest.approx(1.0, abs=1e-15)

    def test_traceless_product(self):
        assert fidelity(GateTarget(Operator(np.eye(2))),
                        Operator([[0, 1], [1, 0]])) == 0.0

    def test_global_phase_invariance(self):
        ident = GateTarget(Operator(np.eye(2)))
        for alpha in (0.3, 1.7, -2.2):
            u = Operator(np.exp(1j * alpha) * np.eye(2))
            assert fidelity(ident, u) == pytest.approx(1.0, abs=1e-14)

    def test_range_and_phase_equality_condition(self, rng):
        for _ in range(20):
            q1, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
            q2, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
            f = fidelity(GateTarget(Operator(q1)), Operator(q2))
            assert 0.0 <= f <= 1.0 + 1e-12
        # equality iff same up to a global phase
        assert fidelity(GateTarget(Operator(q1)),
                        Operator(np.exp(0.4j) * q1)) == pytest.approx(1.0, abs=1e-12)

    def test_error_invariant_under_relabeling(self, rng):
        perm = np.eye(4)[[2, 0, 3, 1]]
        ideal, real = ideal_cnot_like(), synthetic_u1(0.7)
        before = gate_error(ideal, real)
        after = gate_error(GateTarget(Operator(perm @ ideal.unitary.matrix @ perm.T)),
                           Operator(perm @ real.matrix @ perm.T))
        assert before == pytest.approx(after, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(ideal_phase(0.1), Operator(np.eye(4)))


class TestComposeCnot:
    def test_ideal_inputs(self):
        seq = compose_cnot(synthetic_u1(0.0), not_gate(), Operator(np.eye(4)))
        assert fidelity(ideal_cnot_like(), seq.composed) == pytest.approx(1.0, abs=1e-14)
        assert seq.xi == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("xi", [0.0, np.pi / 3, np.pi, -1.9])
    def test_xi_cancellation(self, xi):
        seq = compose_cnot(synthetic_u1(xi), not_gate(), synthetic_u3(xi))
        assert 1.0 - fidelity(ideal_cnot_like(), seq.composed) <= 1e-12
        assert np.isclose(np.angle(np.exp(1j * (seq.xi - xi))), 0.0, atol=1e-12)

    def test_xi_independence_of_composed_fidelity(self):
        errs = [1.0 - fidelity(ideal_cnot_like(),
                               compose_cnot(synthetic_u1(xi), not_gate(),
                                            synthetic_u3(xi)).composed)
                for xi in np.linspace(-np.pi, np.pi, 17)]
        assert max(errs) - min(errs) <= 1e-12

    def test_rejects_block_leakage(self):
        bad = synthetic_u1(0.2).matrix.copy()
        bad[0, 2] = 0.01
        with pytest.raises(BlockStructureError):
            compose_cnot(Operator(bad), not_gate(), synthetic_u3(0.2))

    def test_propagated_pieces(self):
        lim = ScheduleLimits(T=300.0, omega_t_m=1.0, delta_t_m=10.0)
        u1_path = cnot_u1_path(lim)
        u3_path = cnot_u3_path(u1_path)
        r1 = evolve(u1_path, builder_for_path(u1_path), 32.0)
        r3 = evolve_with_echo(u3_path, builder_for_path(u3_path), 32.0,
                              target_not(), u3_path.meta["echo_times"])
        seq = compose_cnot(r1.unitary, not_gate(), r3.unitary)
        assert gate_error(ideal_cnot_like(), seq.composed) <= 1e-4

    def test_extract_block_phase(self):
        assert extract_block_phase(synthetic_u1(1.234)) == pytest.approx(1.234)
