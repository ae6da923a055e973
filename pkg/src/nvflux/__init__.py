"""Gate-level simulation of NV-centre / flux-qubit hybrid registers."""
__version__ = "0.1.0"

from .circuit import Circuit, Gate, TrotterPlan, circuit_unitary, run_circuit, trotterize
from .decoupling import DDSequence, interleave, pulse_times
from .hamiltonian import HamiltonianParams, PauliSum, build_extended_hamiltonian, build_hamiltonian, pauli_decompose
from .noise import GateNoiseParams, NoiseModel, OUParams, StaticBathParams, monte_carlo_evolve
from .observables import Curve, coherence, coherence_time, population, state_fidelity
from .qasm import export_qasm, parse_qasm

__all__ = [
    "Circuit", "Curve", "DDSequence", "Gate", "GateNoiseParams", "HamiltonianParams", "NoiseModel",
    "OUParams", "PauliSum", "StaticBathParams", "TrotterPlan", "build_extended_hamiltonian",
    "build_hamiltonian", "circuit_unitary", "coherence", "coherence_time", "export_qasm",
    "interleave", "monte_carlo_evolve", "parse_qasm", "pauli_decompose", "population",
    "pulse_times", "run_circuit", "state_fidelity", "trotterize",
]
