import numpy as np
import pytest

from qgate.hamiltonians import QubitParams, builder_for_path, h1
from qgate.operators import Operator
from qgate.propagator import (
    OracleError,
    PropagationError,
    adiabatic_oracle,
    evolve,
    evolve_with_echo,
)
from qgate.schedule import (
    LinearProfile,
    ParamPath,
    ScheduleLimits,
    Segment,
    hadamard_path,
    phase_gate_path,
)
from qgate.targets import GateTarget, fidelity, gate_error, ideal_phase, target_not

THETA = np.pi / 2


def limits(T=300.0):
    return ScheduleLimits(T=T, omega_m=1.0, delta_m=10.0, theta=THETA)


def constant_path(values, names, duration=5.0):
    return ParamPath(names, (Segment("hold", duration, values, values),))


class SingleQubitBuilder:
    """values (delta, omega, phi) -> h1; used where paths carry all three."""

    dim = 2

    def __call__(self, values):
        return h1(QubitParams(*values))


class TestEvolve:
    def test_constant_diagonal_generator(self):
        delta, t = 0.9, 5.0
        path = constant_path((delta, 0.0, 0.0), ("delta", "omega", "phi"), t)
        res = evolve(path, SingleQubitBuilder(), 64.0)
        expected = np.diag([np.exp(-0.5j * delta * t), np.exp(0.5j * delta * t)])
        assert np.max(np.abs(res.unitary.matrix - expected)) <= 1e-9

    def test_second_order_convergence(self):
        # crude step densities so discretization error dominates round-off
        path = phase_gate_path(ScheduleLimits(T=20.0, omega_m=1.0, theta=THETA))
        builder = builder_for_path(path)
        exact = evolve(path, builder, 512.0).unitary
        errs = []
        for density in (2.0, 4.0, 8.0):
            u = evolve(path, builder, density).unitary
            errs.append(np.max(np.abs(u.matrix - exact.matrix)))
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(2.5 <= r <= 6.0 for r in ratios)  # ~4x per doubling

    def test_phase_gate_anchor(self):
        path = phase_gate_path(limits())
        res = evolve(path, builder_for_path(path), 32.0)
        assert gate_error(ideal_phase(THETA), res.unitary) <= 1e-4

    def test_unitarity_defect_budget(self):
        path = phase_gate_path(limits())
        res = evolve(path, builder_for_path(path), 32.0)
        assert res.max_unitarity_defect <= 1e-9

    def test_composition_across_split(self):
        path = hadamard_path(limits(T=40.0))
        builder = builder_for_path(path)
        # split at a segment boundary: identical step grids, pure stitching
        whole = evolve(path, builder, 32.0).unitary
        tau = float(path.starts[2])
        first = evolve(path, builder, 32.0, 0.0, tau).unitary
        second = evolve(path, builder, 32.0, tau, path.total_duration).unitary
        assert np.max(np.abs((second @ first).matrix - whole.matrix)) <= 1e-9
        # split inside a segment: agreement limited only by step density
        tau = 0.37 * path.total_duration
        whole = evolve(path, builder, 256.0).unitary
        first = evolve(path, builder, 256.0, 0.0, tau).unitary
        second = evolve(path, builder, 256.0, tau, path.total_duration).unitary
        assert np.max(np.abs((second @ first).matrix - whole.matrix)) <= 1e-9

    def test_zero_density_rejected(self):
        path = phase_gate_path(limits(T=10.0))
        with pytest.raises(PropagationError):
            evolve(path, builder_for_path(path), 0.0)

    def test_dimension_change_rejected(self):
        class Fickle:
            dim = 2

            def __init__(self):
                self.calls = 0

            def build_stack(self, values):
                self.calls += 1
                d = 2 if self.calls == 1 else 3
                return np.zeros((np.atleast_2d(values).shape[0], d, d), complex)

        segs = (Segment("ramp", 1.0, (0.0,), (1.0,)),
                Segment("ramp", 1.0, (1.0,), (0.0,)))
        path = ParamPath(("x",), segs)
        with pytest.raises(PropagationError):
            evolve(path, Fickle(), 4.0)

    def test_callable_builder_accepted(self):
        path = constant_path((0.5, 0.3, 0.1), ("delta", "omega", "phi"), 2.0)
        res_callable = evolve(path, SingleQubitBuilder(), 16.0)
        assert res_callable.unitary.is_unitary()


class TestEvolveWithEcho:
    def test_echo_frames_inserted(self):
        # pure |11> phase accumulation; echo spreads it over the |1x> block
        path = constant_path((0.3, 0.0), ("delta_t", "omega_x_t"), 10.0)
        path = ParamPath(path.names, path.segments, meta={"model": "h2_xz"})
        builder = builder_for_path(path)
        res = evolve_with_echo(path, builder, 64.0, target_not(), (5.0, 10.0))
        u = res.unitary.matrix
        phase = np.exp(-0.5j * 0.3 * 10.0)
        assert np.allclose(np.diag(u), [1, 1, phase, phase], atol=1e-9)


class TestAdiabaticOracle:
    def test_constant_path_phases(self):
        delta, t = 0.8, 6.0
        path = constant_path((delta, 0.4, 0.0), ("delta", "omega", "phi"), t)
        u, phases = adiabatic_oracle(path, SingleQubitBuilder(), 400)
        levels = 0.5 * np.hypot(delta, 0.4)
        assert np.allclose(phases.dynamical, [levels * t, -levels * t], atol=1e-9)
        assert np.allclose(phases.geometric, 0.0, atol=1e-10)
        direct = evolve(path, SingleQubitBuilder(), 64.0).unitary
        assert fidelity(GateTarget(u), direct) >= 1.0 - 1e-9

    def test_phase_gate_echo_is_exact(self):
        # dynamical and geometric phases cancel by the echo: the oracle
        # reproduces the target including its global phase
        path = phase_gate_path(limits(T=50.0))
        u, _ = adiabatic_oracle(path, builder_for_path(path), 3000)
        assert np.max(np.abs(u.matrix - ideal_phase(THETA).unitary.matrix)) <= 1e-6

    def test_oracle_matches_slow_evolution(self):
        path = phase_gate_path(limits(T=3000.0))
        builder = builder_for_path(path)
        u_oracle, _ = adiabatic_oracle(path, builder, 2000)
        u_evolved = evolve(path, builder, 32.0).unitary
        assert fidelity(GateTarget(u_oracle), u_evolved) >= 1.0 - 1e-3

    def test_closed_loop_spectral_consistency_and_berry_phase(self):
        delta, omega = 2.0, 1.0

        class PhiBuilder:
            dim = 2

            def __call__(self, values):
                return h1(QubitParams(delta, omega, values[0]))

        loop = ParamPath(("phi",), (Segment(
            "ramp", 1.0, (0.0,), (2 * np.pi,), LinearProfile()),))
        u, phases = adiabatic_oracle(loop, PhiBuilder(), 3000)
        start = np.linalg.eigh(h1(QubitParams(delta, omega, 0.0)).matrix)[1]
        for k in range(2):
            v = start[:, k]
            assert abs(abs(v.conj() @ u.matrix @ v) - 1.0) <= 1e-6
        # analytic cone Berry phase: +-pi (1 - cos theta)
        cos_t = delta / np.hypot(delta, omega)
        expected = np.pi * (1 - cos_t)
        assert np.allclose(sorted(phases.geometric), sorted([-expected, expected]),
                           atol=1e-5)

    def test_untrackable_crossing_aborts(self):
        # a sudden jump into a flat-overlap (Fourier-rotated) eigenbasis
        # leaves every branch assignment below the 0.5 overlap floor
        d = 5
        j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        fourier = np.exp(2j * np.pi * j * k / d) / np.sqrt(d)
        levels = np.diag(np.arange(1.0, d + 1.0))
        h0 = Operator(levels)
        h1_rot = Operator(fourier @ levels @ fourier.conj().T)

        class JumpBuilder:
            dim = d

            def __call__(self, values):
                return h0 if values[0] < 0.5 else h1_rot

        path = ParamPath(("which",), (
            Segment("hold", 1.0, (0.0,), (0.0,)),
            Segment("jump", 0.0, (0.0,), (1.0,)),
            Segment("hold", 1.0, (1.0,), (1.0,)),
        ))
        with pytest.raises(OracleError):
            adiabatic_oracle(path, JumpBuilder(), 60)

    def test_degenerate_start_seeded_from_first_resolvable_point(self):
        path = phase_gate_path(limits(T=50.0))
        u, _ = adiabatic_oracle(path, builder_for_path(path), 2000)
        assert u.is_unitary(1e-8)
