import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density, random_unitary
from nvflux.circuit import Gate, gate_matrix
from nvflux.errors import DimensionMismatch, IndexOutOfRange, ThresholdAboveStart
from nvflux.linalg import I2, embed, ket, to_density
from nvflux.noise import apply_amplitude_damping, apply_depolarizing
from nvflux.observables import (
    Curve, coherence, coherence_samples, coherence_time, fidelity_samples,
    population, population_samples, state_fidelity, trajectory_stats,
)

PLUS = np.array([1, 1]) / np.sqrt(2)


class TestPopulation:
    def test_ground(self):
        assert population(ket("0"), 0, 0) == 1.0

    def test_plus(self):
        assert population(PLUS, 0, 0) == pytest.approx(0.5)

    def test_after_damping(self):
        rho = apply_amplitude_damping(to_density(ket("01")), 1, 2.0, 2.0)
        assert population(rho, 1, 1) == pytest.approx(math.exp(-1), abs=1e-10)

    def test_bad_index(self):
        with pytest.raises(IndexOutOfRange):
            population(ket("0"), 1, 0)
        with pytest.raises(ValueError):
            population(ket("0"), 0, 2)

    @given(st.integers(0, 2**32 - 1))
    def test_range(self, seed):
        rho = random_density(np.random.default_rng(seed), 8)
        p = [population(rho, q, 1) for q in range(3)]
        assert all(0 <= x <= 1 for x in p)


class TestCoherence:
    def test_plus(self):
        assert coherence(PLUS, 0) == pytest.approx(1.0)

    def test_mixed(self):
        assert coherence(I2 / 2, 0) == 0.0

    @given(st.floats(0, 1))
    def test_pure_dephasing_factor(self, lam):
        # Kraus pair sqrt((1+lam)/2) I, sqrt((1-lam)/2) Z
        rho = to_density(PLUS)
        z = np.diag([1, -1])
        out = (1 + lam) / 2 * rho + (1 - lam) / 2 * z @ rho @ z
        assert coherence(out, 0) == pytest.approx(lam, abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.floats(-6, 6), st.integers(0, 1))
    def test_invariant_under_z_rotation(self, seed, phi, q):
        rho = random_density(np.random.default_rng(seed), 4)
        rz = embed(gate_matrix(Gate("RZ", (0,), (phi,))), [q], 2)
        assert abs(coherence(rz @ rho @ rz.conj().T, q) - coherence(rho, q)) < 1e-12

    def test_reduced_state_of_ghz(self):
        ghz = (ket("000") + ket("111")) / np.sqrt(2)
        assert coherence(ghz, 0) == pytest.approx(0.0, abs=1e-15)


class TestFidelity:
    def test_self(self, rng):
        psi = random_unitary(rng, 4)[:, 0]
        assert state_fidelity(psi, psi) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert state_fidelity(ket("0"), ket("1")) == 0.0

    @given(st.floats(0, 1))
    def test_depolarized_ground(self, p):
        assert state_fidelity(apply_depolarizing(to_density(ket("0")), 0, p), ket("0")) == pytest.approx(1 - 2 * p / 3, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_uhlmann_symmetric_and_pure_consistent(self, seed):
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(rng, 4), random_density(rng, 4)
        assert abs(state_fidelity(rho, sigma) - state_fidelity(sigma, rho)) < 1e-10
        psi = random_unitary(rng, 4)[:, 0]
        assert abs(state_fidelity(rho, to_density(psi)) - np.vdot(psi, rho @ psi).real) < 1e-10

    def test_one_iff_equal(self, rng):
        psi = random_unitary(rng, 4)[:, 0]
        assert abs(state_fidelity(to_density(psi), psi) - 1) < 1e-9
        other = random_unitary(rng, 4)[:, 0]
        assert state_fidelity(to_density(other), psi) < 1 - 1e-9

    def test_monotone_under_repeated_depolarizing(self, rng):
        psi = random_unitary(rng, 2)[:, 0]
        rho, last = to_density(psi), 1.0
        for _ in range(10):
            rho = apply_depolarizing(rho, 0, 0.1)
            f = state_fidelity(rho, psi)
            assert f <= last + 1e-12
            last = f

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            state_fidelity(ket("0"), ket("00"))


class TestCoherenceTime:
    def test_never_crossed(self):
        t, crossed = coherence_time(Curve([0, 1, 2], [1, 1, 1], [0, 0, 0]), 0.4)
        assert t == math.inf and not crossed

    def test_linear(self):
        times = np.linspace(0, 10, 11)
        assert coherence_time(Curve(times, 1 - times / 10, np.zeros(11)), 0.4) == (pytest.approx(6.0), True)

    @given(st.floats(0.5, 20))
    def test_exponential_within_grid_spacing(self, tau):
        times = np.linspace(0, 5 * tau, 51)
        t, _ = coherence_time(Curve(times, np.exp(-times / tau), np.zeros(51)), 1 / math.e)
        assert abs(t - tau) <= times[1]

    @given(st.floats(0.05, 0.9), st.floats(0.05, 0.9))
    def test_monotone_in_threshold(self, a, b):
        times = np.linspace(0, 4, 41)
        curve = Curve(times, np.exp(-times**2), np.zeros(41))
        lo, hi = sorted((a, b))
        assert coherence_time(curve, hi).time <= coherence_time(curve, lo).time

    def test_start_below(self):
        with pytest.raises(ThresholdAboveStart):
            coherence_time(Curve([0, 1], [0.3, 0.2], [0, 0]), 0.4)


class TestCurveAndSamples:
    def test_curve_validation(self):
        with pytest.raises(DimensionMismatch):
            Curve([0, 1], [1.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            Curve([0, 0], [1.0, 1.0], [0.0, 0.0])

    def test_stats(self):
        m, se = trajectory_stats([1.0, 2.0, 3.0, 4.0])
        assert m == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
        assert trajectory_stats([0.7]) == (0.7, 0.0)

    def test_sample_means_match_ensemble(self, rng):
        rhos = np.array([random_density(rng, 4) for _ in range(30)])
        mean = rhos.mean(axis=0)
        assert np.mean(coherence_samples(rhos, 1)) == pytest.approx(coherence(mean, 1))
        assert np.mean(population_samples(rhos, 0, 1)) == pytest.approx(population(mean, 0, 1))
        psi = random_unitary(rng, 4)[:, 0]
        assert np.mean(fidelity_samples(rhos, psi)) == pytest.approx(state_fidelity(mean, psi))
