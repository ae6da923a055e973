"""Dense few-qubit linear algebra.

States are plain numpy arrays: a 1-d array of length ``2**n`` is a state
vector, a ``2**n x 2**n`` array is a density matrix. Qubit 0 is the most
significant bit of the basis index, so ``tensor_product(a, b)`` puts ``a``
on the lower-numbered qubit.
"""
from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NonHermitian, NonUnitary

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

UNITARY_TOL = 1e-8
HERMITIAN_TOL = 1e-8


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two")
    return n


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; the first operand acts on the most significant qubit."""
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def pauli_string_matrix(letters: str) -> np.ndarray:
    return tensor_product(*(PAULI[c] for c in letters))


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def ket(bits: str) -> np.ndarray:
    """``ket("10")`` is |10>, qubit 0 first."""
    return basis_state(len(bits), int(bits, 2))


def to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 2:
        return state
    return np.outer(state, state.conj())


def is_density(state: np.ndarray) -> bool:
    return np.ndim(state) == 2


def state_qubits(state: np.ndarray) -> int:
    return n_qubits_of(np.shape(state)[0])


def check_density(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise NonHermitian("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError(f"density matrix trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T)) < tol


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise IndexOutOfRange(f"repeated target in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise IndexOutOfRange(f"qubit {t} outside register of {n}")
    return targets


def _left_apply(tensor: np.ndarray, u: np.ndarray, axes: list[int]) -> np.ndarray:
    k = len(axes)
    ut = u.reshape((2,) * (2 * k))
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_unitary(state: np.ndarray, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``u`` to ``targets`` of a state vector or density matrix.

    Returns a new array; the input is not modified.
    """
    state = np.asarray(state, dtype=complex)
    u = np.asarray(u, dtype=complex)
    n = state_qubits(state)
    targets = _check_targets(targets, n)
    if u.shape != (2 ** len(targets),) * 2:
        raise DimensionMismatch(f"operator of shape {u.shape} for {len(targets)} targets")
    if not is_unitary(u):
        raise NonUnitary("operator is not unitary within tolerance")
    if state.ndim == 1:
        t = _left_apply(state.reshape((2,) * n), u, targets)
        return t.reshape(-1)
    t = state.reshape((2,) * (2 * n))
    t = _left_apply(t, u, targets)
    t = _left_apply(t, u.conj(), [n + q for q in targets])
    return t.reshape(2**n, 2**n)


def embed(u: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full-register matrix of ``u`` acting on ``targets``."""
    targets = _check_targets(targets, n_qubits)
    eye = np.eye(2**n_qubits, dtype=complex).reshape((2,) * n_qubits + (2**n_qubits,))
    cols = _left_apply(eye, np.asarray(u, dtype=complex), targets)
    return cols.reshape(2**n_qubits, 2**n_qubits)


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (returned in ascending qubit order)."""
    rho = to_density(rho)
    n = state_qubits(rho)
    keep = sorted(_check_targets(keep, n))
    if not keep:
        raise IndexOutOfRange("keep must be nonempty")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for q in drop:
        cols[q] = rows[q]
    out = "".join(rows[q] for q in keep) + "".join(cols[q] for q in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def matrix_exponential(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` by Hermitian eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise NonHermitian("generator must be Hermitian")
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """``1 - |Tr(U^dag V)| / dim``; zero iff equal up to global phase."""
    return float(1.0 - abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))) / u.shape[0])


def operator_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral-norm distance minimised over a global phase."""
    overlap = np.trace(np.asarray(u).conj().T @ np.asarray(v))
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(u * phase - v, 2))
