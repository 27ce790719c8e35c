"""Adiabatic-passage quantum gate simulator.

Gate protocols built from time-symmetric parameter trajectories whose
outcome is independent of the (unknown) map between experimental knobs and
Hamiltonian parameters, plus a bosonic two-site lattice realization where
the atom number per site is uncertain, and a sweep harness producing
error-vs-duration and error-vs-interaction-ratio curves with deterministic
outputs.
"""
from ._backend import backend_name
from .hamiltonians import (
    QubitParams,
    TwoQubitParams,
    builder_for_path,
    h1,
    h2,
)
from .operators import Operator, Spectrum, eigensystem, tensor, unitary_exp
from .propagator import (
    AdiabaticPhases,
    EvolutionResult,
    adiabatic_oracle,
    evolve,
    evolve_with_echo,
)
from .schedule import (
    ParamPath,
    ScheduleLimits,
    UnknownMap,
    cnot_u1_path,
    cnot_u3_path,
    hadamard_path,
    phase_gate_path,
    sample,
    verify_timing,
)
from .targets import (
    CnotSequence,
    GateTarget,
    compose_cnot,
    fidelity,
    gate_error,
    ideal_cnot_like,
    ideal_hadamard_like,
    ideal_phase,
    not_gate,
    target_not,
)

__version__ = "0.1.0"

__all__ = [
    "AdiabaticPhases",
    "CnotSequence",
    "EvolutionResult",
    "GateTarget",
    "Operator",
    "ParamPath",
    "QubitParams",
    "ScheduleLimits",
    "Spectrum",
    "TwoQubitParams",
    "UnknownMap",
    "__version__",
    "adiabatic_oracle",
    "backend_name",
    "builder_for_path",
    "cnot_u1_path",
    "cnot_u3_path",
    "compose_cnot",
    "eigensystem",
    "evolve",
    "evolve_with_echo",
    "fidelity",
    "gate_error",
    "h1",
    "h2",
    "hadamard_path",
    "ideal_cnot_like",
    "ideal_hadamard_like",
    "ideal_phase",
    "not_gate",
    "phase_gate_path",
    "sample",
    "target_not",
    "tensor",
    "unitary_exp",
    "verify_timing",
]
