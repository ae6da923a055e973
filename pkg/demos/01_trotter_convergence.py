"""Compile the three-qubit Hamiltonian into gates and watch first-order Trotter error shrink.

Run: python demos/01_trotter_convergence.py
"""
from nvflux.circuit import TrotterPlan, circuit_unitary, trotterize
from nvflux.hamiltonian import HamiltonianParams, build_hamiltonian, pauli_decompose
from nvflux.linalg import matrix_exponential, operator_distance

params = HamiltonianParams()
h = build_hamiltonian(params)
terms = pauli_decompose(h)
print(f"{len(terms)} Pauli terms, largest |c| = {max(abs(c) for c in terms.terms.values()):.1f} MHz*2pi")

t = 0.05  # us
exact = matrix_exponential(h, t)
prev = None
for steps in (4, 8, 16, 32, 64):
    c = trotterize(terms, TrotterPlan(t, steps))
    err = operator_distance(circuit_unitary(c), exact)
    ratio = f"  ratio {prev / err:.3f}" if prev else ""
    print(f"steps={steps:3d}  gates={len(c.gates):5d}  error={err:.3e}{ratio}")
    prev = err
# first order: the error per unit time scales as dt, so doubling steps halves it
