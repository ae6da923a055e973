"""Populations, coherence, fidelity and coherence-time summaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, ThresholdAboveStart
from .linalg import partial_trace, state_qubits, to_density


@dataclass
class Curve:
    times: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    label: str = ""
    units: str = "us"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.std_errors = np.asarray(self.std_errors, dtype=float)
        if not len(self.times) == len(self.values) == len(self.std_errors):
            raise DimensionMismatch("curve arrays must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("curve times must be strictly increasing")


def _reduced(rho: np.ndarray, qubit: int) -> np.ndarray:
    rho = to_density(rho)
    n = state_qubits(rho)
    if not 0 <= qubit < n:
        raise IndexOutOfRange(f"qubit {qubit} outside register of {n}")
    return partial_trace(rho, [qubit])


def population(rho: np.ndarray, qubit: int, level: int) -> float:
    if level not in (0, 1):
        raise ValueError("level must be 0 or 1")
    p = float(_reduced(rho, qubit)[level, level].real)
    return min(max(p, 0.0), 1.0)


def coherence(rho: np.ndarray, qubit: int) -> float:
    """``2 |rho_01|`` of the qubit's reduced state."""
    return float(min(2 * abs(_reduced(rho, qubit)[0, 1]), 1.0))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    # eigenvalues at rounding level are zeros; their square roots would not be
    floor = 10 * len(w) * np.finfo(float).eps * max(w.max(), 0.0)
    return (v * np.sqrt(np.where(w > floor, w, 0.0))) @ v.conj().T


def state_fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """``<psi|rho|psi>`` for a state-vector target, Uhlmann fidelity otherwise."""
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if rho.shape[0] != target.shape[0]:
        raise DimensionMismatch("states live on different registers")
    if target.ndim == 1 or rho.ndim == 1:
        psi, other = (target, rho) if target.ndim == 1 else (rho, target)
        f = np.vdot(psi, to_density(other) @ psi).real
    else:
        # trace norm of sqrt(rho) sqrt(sigma), symmetric in its arguments
        f = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(target), compute_uv=False).sum() ** 2
    return float(min(max(f, 0.0), 1.0))


class Crossing(NamedTuple):
    time: float
    crossed: bool


def coherence_time(curve: Curve, threshold: float = 0.4) -> Crossing:
    """First downward crossing of ``threshold``, linearly interpolated.

    Returns ``Crossing(inf, False)`` when the curve never drops below it.
    """
    v, t = curve.values, curve.times
    if not v[0] > threshold:
        raise ThresholdAboveStart(f"curve starts at {v[0]}, not above {threshold}")
    below = np.nonzero(v <= threshold)[0]
    if len(below) == 0:
        return Crossing(float("inf"), False)
    k = below[0]
    frac = (v[k - 1] - threshold) / (v[k - 1] - v[k])
    return Crossing(float(t[k - 1] + frac * (t[k] - t[k - 1])), True)


# per-trajectory helpers; ``rhos`` has shape (B, d, d)


def trajectory_stats(samples: np.ndarray) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n)) of per-trajectory values."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, se


def coherence_samples(rhos: np.ndarray, qubit: int) -> np.ndarray:
    """Per-trajectory ``2 rho_01`` projected on the ensemble phase.

    The mean of the returned samples equals the ensemble coherence.
    """
    off = np.array([2 * _reduced(r, qubit)[0, 1] for r in rhos])
    m = off.mean()
    phase = np.conj(m) / abs(m) if abs(m) > 0 else 1.0
    return (off * phase).real


def fidelity_samples(rhos: np.ndarray, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.einsum("i,bij,j->b", psi.conj(), rhos, psi).real


def population_samples(rhos: np.ndarray, qubit: int, level: int) -> np.ndarray:
    return np.array([_reduced(r, qubit)[level, level].real for r in rhos])
