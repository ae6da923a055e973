import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density, random_hermitian, random_unitary
from nvflux.errors import IndexOutOfRange, NonHermitian, NonUnitary
from nvflux.hamiltonian import HamiltonianParams, build_hamiltonian
from nvflux.linalg import (
    I2, X, Y, Z,
    apply_unitary, basis_state, embed, ket, matrix_exponential,
    partial_trace, phase_distance, tensor_product, to_density,
)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]


class TestTensorProduct:
    def test_identity(self):
        assert np.array_equal(tensor_product(I2, I2), np.eye(4))

    def test_first_operand_is_most_significant(self):
        # basis index 2 = |10>: qubit 0 is excited
        assert (tensor_product(Z, I2) @ basis_state(2, 2))[2] == -1

    def test_bit_flip_both(self):
        assert np.allclose(tensor_product(X, X) @ ket("00"), ket("11"))

    @given(st.integers(0, 2**32 - 1))
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
        lhs, rhs = tensor_product(tensor_product(a, b), c), tensor_product(a, tensor_product(b, c))
        assert np.max(np.abs(lhs - rhs)) < 1e-14


class TestApplyUnitary:
    def test_hadamard(self):
        assert np.allclose(apply_unitary(ket("0"), H, [0]), [2**-0.5, 2**-0.5])

    def test_cnot_truth_table(self):
        assert np.allclose(apply_unitary(ket("10"), CNOT, [0, 1]), ket("11"))

    def test_cnot_reversed_targets(self):
        # control on qubit 1, target on qubit 0
        assert np.allclose(apply_unitary(ket("01"), CNOT, [1, 0]), ket("11"))

    def test_mixed_state_invariant(self):
        assert np.allclose(apply_unitary(I2 / 2, X, [0]), I2 / 2)

    def test_matches_embedded_kron(self, rng):
        u = random_unitary(rng, 4)
        psi = random_unitary(rng, 8)[:, 0]
        full = embed(u, [2, 0], 3)
        assert np.allclose(apply_unitary(psi, u, [2, 0]), full @ psi, atol=1e-12)
        rho = random_density(rng, 8)
        assert np.allclose(apply_unitary(rho, u, [2, 0]), full @ rho @ full.conj().T, atol=1e-12)

    def test_non_unitary_rejected(self):
        with pytest.raises(NonUnitary):
            apply_unitary(ket("0"), np.array([[1, 0], [0, 2]]), [0])

    @pytest.mark.parametrize("targets", [[2], [0, 0], [-1]])
    def test_bad_targets(self, targets):
        u = CNOT if len(targets) == 2 else X
        with pytest.raises(IndexOutOfRange):
            apply_unitary(ket("00"), u, targets)

    def test_input_not_modified(self):
        psi = ket("0")
        apply_unitary(psi, X, [0])
        assert np.array_equal(psi, ket("0"))

    def test_norm_drift_over_many_gates(self, rng):
        us = [random_unitary(rng, 2) for _ in range(16)]
        psi = basis_state(3)
        for k in range(10_000):
            psi = apply_unitary(psi, us[k % 16], [k % 3])
        assert abs(np.linalg.norm(psi) - 1) < 1e-8

    @given(st.integers(0, 2**32 - 1))
    def test_trace_preserved(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng, 4)
        out = apply_unitary(rho, random_unitary(rng, 2), [1])
        assert abs(np.trace(out) - 1) < 1e-12


class TestPartialTrace:
    def test_product_state(self):
        assert np.allclose(partial_trace(to_density(ket("00")), [0]), to_density(ket("0")))

    @pytest.mark.parametrize("keep", [[0], [1]])
    def test_bell(self, keep):
        bell = (ket("00") + ket("11")) / np.sqrt(2)
        assert np.allclose(partial_trace(to_density(bell), keep), I2 / 2)

    def test_keep_all(self, rng):
        rho = random_density(rng, 4)
        assert np.allclose(partial_trace(rho, [0, 1]), rho)

    def test_keep_returned_in_register_order(self, rng):
        a, b = random_density(rng, 2), random_density(rng, 2)
        assert np.allclose(partial_trace(np.kron(a, b), [1, 0]), np.kron(a, b))

    @given(st.integers(0, 2**32 - 1))
    def test_product_states_exact(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_density(rng, 4), random_density(rng, 2)
        assert np.max(np.abs(partial_trace(np.kron(a, b), [0, 1]) - a)) < 1e-12
        assert np.max(np.abs(partial_trace(np.kron(a, b), [2]) - b)) < 1e-12

    @pytest.mark.parametrize("keep", [[], [3], [0, 0]])
    def test_bad_keep(self, keep):
        with pytest.raises(IndexOutOfRange):
            partial_trace(np.eye(4) / 4, keep)


class TestMatrixExponential:
    def test_zero_time(self):
        assert np.allclose(matrix_exponential(X, 0.0), I2)

    def test_rabi_half_period(self):
        u = matrix_exponential(X, np.pi / 2)
        assert np.allclose(u @ ket("0"), -1j * ket("1"))

    def test_against_scaling_and_squaring(self):
        # independent algorithm (Pade scaling-and-squaring) as oracle
        h = build_hamiltonian(HamiltonianParams())
        u = matrix_exponential(h, 0.01)
        assert np.max(np.abs(u - scipy.linalg.expm(-1j * h * 0.01))) < 1e-9

    def test_non_hermitian(self):
        with pytest.raises(NonHermitian):
            matrix_exponential(np.array([[0, 1], [0, 0]]), 1.0)

    @given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
    def test_semigroup(self, seed, t1, t2):
        h = random_hermitian(np.random.default_rng(seed), 4)
        lhs = matrix_exponential(h, t1) @ matrix_exponential(h, t2)
        assert np.max(np.abs(lhs - matrix_exponential(h, t1 + t2))) < 1e-9


def test_phase_distance_ignores_global_phase(rng):
    u = random_unitary(rng, 4)
    assert phase_distance(u, np.exp(0.7j) * u) < 1e-12
    assert phase_distance(u, u @ embed(Y, [0], 2)) > 0.1
