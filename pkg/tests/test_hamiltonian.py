import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian
from nvflux.errors import InvalidParams, NonHermitian
from nvflux.hamiltonian import (
    HamiltonianParams, PauliSum, SpinEncoding,
    build_extended_hamiltonian, build_hamiltonian, pauli_decompose,
)
from nvflux.linalg import is_hermitian, ket, partial_trace, to_density

QUIET = dict(b0=0.0, delta=0.0, j_c=0.0, j_n=0.0, q_quad=0.0, gamma_e=0.0, gamma_n=0.0)


def diagonal_by_hand(p: HamiltonianParams, bits: str) -> float:
    """Energy of a computational basis state of the delta = 0 model, term by term."""
    e, nuc, f = (int(b) for b in bits)
    zf = 1 - 2 * f
    return p.d_zfs * e + p.gamma_e * p.b0 * e - p.gamma_n * p.b0 * nuc + p.j_c * p.g_f * e * zf + p.j_n * e * nuc


class TestBuildHamiltonian:
    def test_zero_field_splitting_only(self):
        h = build_hamiltonian(HamiltonianParams(**QUIET))
        for bits in ("100", "101", "110", "111"):
            assert np.vdot(ket(bits), h @ ket(bits)).real == pytest.approx(2.87e3)
        for bits in ("000", "011"):
            assert np.vdot(ket(bits), h @ ket(bits)).real == 0

    def test_electron_and_nitrogen_excited(self):
        # D + JN needs the flux coupling off; with g_f = 1 the JC term adds on flux |0>
        h0 = build_hamiltonian(HamiltonianParams(delta=0.0, b0=0.0, g_f=0.0))
        assert np.vdot(ket("110"), h0 @ ket("110")).real == pytest.approx(2.87e3 + 2.1)
        h1 = build_hamiltonian(HamiltonianParams(delta=0.0, b0=0.0))
        assert np.vdot(ket("110"), h1 @ ket("110")).real == pytest.approx(2.87e3 + 2.1 + 14.0)

    def test_flux_tunnelling_is_off_diagonal(self):
        h = build_hamiltonian(HamiltonianParams())
        assert np.any(np.abs(h - np.diag(np.diag(h))) > 0)
        assert np.array_equal(h, h.conj().T)

    @given(
        st.floats(1.0, 5e3), st.floats(-10, 10), st.floats(-1e-2, 1e-2), st.floats(-5, 5),
        st.floats(-20, 20), st.floats(-5, 5), st.floats(-3, 3),
    )
    def test_diagonal_eigenvalues_match_hand_rule(self, d, ge, gn, b0, jc, jn, gf):
        p = HamiltonianParams(d_zfs=d, gamma_e=ge, gamma_n=gn, b0=b0, j_c=jc, j_n=jn, g_f=gf, delta=0.0)
        h = build_hamiltonian(p)
        expected = [diagonal_by_hand(p, "".join(b)) for b in itertools.product("01", repeat=3)]
        assert np.allclose(np.diag(h).real, expected, atol=1e-9)
        assert np.allclose(np.sort(np.linalg.eigvalsh(h)), np.sort(expected), atol=1e-8)

    @given(st.floats(-1e3, 1e3), st.floats(-10, 10), st.floats(-50, 50), st.floats(0.1, 5e3))
    def test_hermitian(self, delta, b0, q, d):
        h = build_hamiltonian(HamiltonianParams(delta=delta, b0=b0, q_quad=q, d_zfs=d))
        assert np.max(np.abs(h - h.conj().T)) < 1e-12

    def test_quadrupole_term_is_observably_inert(self):
        psi0 = (ket("000") + ket("101")) / np.sqrt(2)
        states = []
        for q in (-5.1, 0.0):
            u = scipy.linalg.expm(-1j * 0.37 * build_hamiltonian(HamiltonianParams(q_quad=q)))
            states.append(to_density(u @ psi0))
        assert np.max(np.abs(states[0] - states[1])) < 1e-10
        for k in range(3):
            assert np.allclose(partial_trace(states[0], [k]), partial_trace(states[1], [k]), atol=1e-10)

    def test_rejects_multi_nv(self):
        with pytest.raises(InvalidParams):
            build_hamiltonian(HamiltonianParams(n_nv=2))


class TestParams:
    @pytest.mark.parametrize("kw", [{"d_zfs": 0.0}, {"n_nv": 5}, {"n_nv": 0}, {"delta": float("nan")}, {"j_c": float("inf")}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidParams):
            HamiltonianParams(**kw)

    def test_provenance_flags_defaults(self):
        prov = HamiltonianParams().provenance()
        assert prov["d_zfs"] == prov["j_c"] == prov["q_quad"] == "paper"
        assert prov["delta"] == prov["g_f"] == prov["b0"] == "default"
        assert HamiltonianParams(j_c=3.0).provenance()["j_c"] == "default"

    def test_encoding_levels_distinct(self):
        with pytest.raises(InvalidParams):
            SpinEncoding(0, 0)


class TestExtended:
    def test_single_nv_matches_three_qubit_model_without_nitrogen(self):
        p = HamiltonianParams(j_n=0.0, gamma_n=0.0, b0=0.7)
        h3 = build_hamiltonian(p)
        # nitrogen line is now idle: restrict to its |0> sector (indices e0f)
        sector = [0, 1, 4, 5]
        assert np.allclose(h3[np.ix_(sector, sector)], build_extended_hamiltonian(p), atol=1e-12)

    def test_two_nv_diagonal(self):
        h = build_extended_hamiltonian(HamiltonianParams(n_nv=2, **QUIET))
        assert np.vdot(ket("110"), h @ ket("110")).real == pytest.approx(2 * 2.87e3)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_delta_zero_is_diagonal(self, n):
        h = build_extended_hamiltonian(HamiltonianParams(n_nv=n, delta=0.0))
        assert h.shape == (2 ** (n + 1),) * 2
        assert np.array_equal(h, np.diag(np.diag(h)))

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_hermitian(self, n):
        assert is_hermitian(build_extended_hamiltonian(HamiltonianParams(n_nv=n, b0=0.3)), 1e-12)


class TestPauliDecompose:
    def test_single_z(self):
        ps = pauli_decompose(np.diag([1.0, -1.0]))
        assert ps.terms == {"Z": 1.0}

    def test_diagonal_model_has_only_z_strings(self):
        h = build_hamiltonian(HamiltonianParams(delta=0.0, b0=0.0))
        ps = pauli_decompose(h)
        assert all(set(s) <= {"I", "Z"} for s, _ in ps)
        assert np.max(np.abs(ps.to_matrix() - h)) < 1e-9

    def test_coefficients_match_trace_formula(self):
        h = build_hamiltonian(HamiltonianParams())
        ps = pauli_decompose(h)
        from nvflux.linalg import pauli_string_matrix

        for s, c in ps:
            assert c == pytest.approx(np.trace(pauli_string_matrix(s) @ h).real / 8, rel=1e-12, abs=1e-12)
        assert ps.identity_coefficient() == pytest.approx(np.trace(h).real / 8)

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_random_hermitian(self, seed):
        h = random_hermitian(np.random.default_rng(seed), 8)
        assert np.max(np.abs(pauli_decompose(h).to_matrix() - h)) < 1e-9

    def test_non_hermitian(self):
        with pytest.raises(NonHermitian):
            pauli_decompose(np.array([[0, 1], [0, 0]]))

    @pytest.mark.parametrize("terms", [{"ZZ": 1.0}, {"Q": 1.0}, {"Z": float("nan")}])
    def test_bad_pauli_sum(self, terms):
        with pytest.raises(InvalidParams):
            PauliSum(1, terms)
