"""Classical field noise, hardware channels and Monte-Carlo trajectory averaging.

Dephasing noise is a random detuning ``b(t)`` on selected qubits, i.e. a
Hamiltonian ``b(t) Z / 2``. Over a Trotter step of length ``dt`` it becomes
``RZ(phi)`` with ``phi`` the integrated detuning. Two sources are supported:

* an Ornstein-Uhlenbeck process (exact discretization, stationary start),
* a static Gaussian detuning drawn once per trajectory.

Depolarizing noise follows every non-ideal gate, amplitude damping acts at
every time step. Both are applied exactly as channels on density matrices.

Trajectory ``j`` draws all of its randomness from ``default_rng(base_seed + j)``
so results do not depend on chunking or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Gate, gate_matrix
from .errors import IndexOutOfRange, InvalidParams, InvalidProbability, RegisterMismatch
from .linalg import state_qubits, to_density

CHUNK = 64


@dataclass(frozen=True)
class OUParams:
    tau_c: float
    sigma_b: float
    dt: float

    def __post_init__(self):
        if not self.tau_c > 0:
            raise InvalidParams("tau_c must be positive")
        if not self.sigma_b >= 0:
            raise InvalidParams("sigma_b must be non-negative")
        if not 0 < self.dt <= self.tau_c / 5 * (1 + 1e-12):
            raise InvalidParams("dt must lie in (0, tau_c/5]")


@dataclass(frozen=True)
class StaticBathParams:
    sigma_static: float

    def __post_init__(self):
        if not self.sigma_static >= 0:
            raise InvalidParams("sigma_static must be non-negative")


@dataclass(frozen=True)
class GateNoiseParams:
    p_depol_1q: float = 0.0
    p_depol_2q: float = 0.0
    t1: float | None = None  # None disables amplitude damping

    def __post_init__(self):
        for p in (self.p_depol_1q, self.p_depol_2q):
            if not 0 <= p <= 1:
                raise InvalidProbability("depolarizing probability outside [0, 1]")
        if self.t1 is not None and not self.t1 > 0:
            raise InvalidParams("t1 must be positive (or None to disable)")

    @property
    def active(self) -> bool:
        return self.p_depol_1q > 0 or self.p_depol_2q > 0 or self.t1 is not None


@dataclass(frozen=True)
class NoiseModel:
    ou: dict[int, OUParams] = field(default_factory=dict)
    static: dict[int, StaticBathParams] = field(default_factory=dict)
    gate: GateNoiseParams | None = None
    n_trajectories: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if int(self.n_trajectories) != self.n_trajectories or self.n_trajectories < 1:
            raise InvalidParams("n_trajectories must be >= 1")

    @property
    def stochastic(self) -> bool:
        return any(p.sigma_b > 0 for p in self.ou.values()) or any(
            p.sigma_static > 0 for p in self.static.values()
        )

    @property
    def has_channels(self) -> bool:
        return self.gate is not None and self.gate.active


def _ou_path(normals: np.ndarray, sigma: float, tau_c: float, steps: np.ndarray) -> np.ndarray:
    """OU samples for a batch: ``normals`` has shape (B, len(steps) + 1)."""
    b = np.empty_like(normals)
    b[:, 0] = sigma * normals[:, 0]
    decay = np.exp(-steps / tau_c)
    kick = sigma * np.sqrt(-np.expm1(-2 * steps / tau_c))
    for k in range(len(steps)):
        b[:, k + 1] = decay[k] * b[:, k] + kick[k] * normals[:, k + 1]
    return b


def sample_ou_trajectory(p: OUParams, n_steps: int, seed: int) -> np.ndarray:
    """``b[0..n_steps]`` on a uniform grid of spacing ``p.dt``."""
    if n_steps < 0:
        raise InvalidParams("n_steps must be >= 0")
    xi = np.random.default_rng(seed).standard_normal(n_steps + 1)
    return _ou_path(xi[None, :], p.sigma_b, p.tau_c, np.full(n_steps, p.dt))[0]


def dephasing_angles(trajectory: np.ndarray, dt: float) -> np.ndarray:
    """Per-step RZ angles ``b[k] * dt``."""
    if not dt > 0:
        raise InvalidParams("dt must be positive")
    return np.asarray(trajectory, dtype=float) * dt


# ---------------------------------------------------------------------------
# batched state kernels; the batch axis is axis 0


def _ix(ndim: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * ndim
    for axis, v in fixed.items():
        idx[axis] = v
    return tuple(idx)


def _bcast(v: np.ndarray, ndim: int) -> np.ndarray:
    return v.reshape((-1,) + (1,) * (ndim - 1))


class _Batch:
    def __init__(self, initial: np.ndarray, n: int, size: int, density: bool):
        self.n = n
        self.density = density
        init = to_density(initial) if density else np.asarray(initial, dtype=complex)
        shape = (2,) * (2 * n if density else n)
        self.t = np.broadcast_to(init.reshape(shape), (size,) + shape).copy()

    def _mix(self, u: np.ndarray, axis: int) -> None:
        t = self.t
        a0 = t[_ix(t.ndim, {axis: 0})]
        a1 = t[_ix(t.ndim, {axis: 1})]
        if u[0, 1] == 0 and u[1, 0] == 0:
            n0, n1 = u[0, 0] * a0, u[1, 1] * a1
        elif u[0, 0] == 0 and u[1, 1] == 0:
            n0, n1 = u[0, 1] * a1, u[1, 0] * a0
        else:
            n0 = u[0, 0] * a0 + u[0, 1] * a1
            n1 = u[1, 0] * a0 + u[1, 1] * a1
        self.t = np.stack([n0, n1], axis=axis)

    def apply_1q(self, u: np.ndarray, q: int) -> None:
        self._mix(u, 1 + q)
        if self.density:
            self._mix(u.conj(), 1 + self.n + q)

    def _cnot_axes(self, c: int, tgt: int) -> None:
        t = self.t
        out = t.copy()
        sel = _ix(t.ndim, {c: 1})
        out[sel] = np.flip(t[sel], axis=tgt if tgt < c else tgt - 1)
        self.t = out

    def apply_cnot(self, c: int, tgt: int) -> None:
        self._cnot_axes(1 + c, 1 + tgt)
        if self.density:
            self._cnot_axes(1 + self.n + c, 1 + self.n + tgt)

    def apply_rz(self, angles: np.ndarray, q: int) -> None:
        """Per-trajectory RZ; ``angles`` has shape (B,)."""
        t = self.t
        if self.density:
            r, c = 1 + q, 1 + self.n + q
            ph = _bcast(np.exp(-1j * angles), t.ndim - 2)
            t[_ix(t.ndim, {r: 0, c: 1})] *= ph
            t[_ix(t.ndim, {r: 1, c: 0})] *= ph.conj()
        else:
            ph = _bcast(np.exp(-0.5j * angles), t.ndim - 1)
            a = 1 + q
            t[_ix(t.ndim, {a: 0})] *= ph
            t[_ix(t.ndim, {a: 1})] *= ph.conj()

    def depolarize(self, q: int, p: float) -> None:
        t = self.t
        r, c = 1 + q, 1 + self.n + q
        i00, i11 = _ix(t.ndim, {r: 0, c: 0}), _ix(t.ndim, {r: 1, c: 1})
        i01, i10 = _ix(t.ndim, {r: 0, c: 1}), _ix(t.ndim, {r: 1, c: 0})
        keep = 1 - 4 * p / 3
        mixed = (2 * p / 3) * (t[i00] + t[i11])
        t[i00] = keep * t[i00] + mixed
        t[i11] = keep * t[i11] + mixed
        t[i01] *= keep
        t[i10] *= keep

    def amplitude_damp(self, q: int, ratio: float) -> None:
        """Damping over ``ratio = duration / t1``; survival factors are formed directly, not as 1 - gamma."""
        gamma, keep = -math.expm1(-ratio), math.exp(-ratio)
        t = self.t
        r, c = 1 + q, 1 + self.n + q
        i00, i11 = _ix(t.ndim, {r: 0, c: 0}), _ix(t.ndim, {r: 1, c: 1})
        i01, i10 = _ix(t.ndim, {r: 0, c: 1}), _ix(t.ndim, {r: 1, c: 0})
        s = math.exp(-ratio / 2)
        t[i00] += gamma * t[i11]
        t[i11] *= keep
        t[i01] *= s
        t[i10] *= s

    def apply_gate(self, g: Gate) -> None:
        if g.kind == "CNOT":
            self.apply_cnot(*g.targets)
        else:
            self.apply_1q(gate_matrix(g), g.targets[0])

    def densities(self) -> np.ndarray:
        d = 2**self.n
        if self.density:
            return self.t.reshape(-1, d, d)
        psi = self.t.reshape(-1, d)
        return psi[:, :, None] * psi[:, None, :].conj()


def _single(rho: np.ndarray, qubit: int) -> _Batch:
    rho = to_density(rho)
    n = state_qubits(rho)
    if not 0 <= qubit < n:
        raise IndexOutOfRange(f"qubit {qubit} outside register of {n}")
    return _Batch(rho, n, 1, density=True)


def apply_depolarizing(rho: np.ndarray, qubit: int, p: float) -> np.ndarray:
    """Single-qubit depolarizing channel with Pauli error probability ``p``."""
    if not 0 <= p <= 1:
        raise InvalidProbability("p must lie in [0, 1]")
    b = _single(rho, qubit)
    b.depolarize(qubit, p)
    return b.densities()[0]


def apply_amplitude_damping(rho: np.ndarray, qubit: int, duration: float, t1: float) -> np.ndarray:
    """Relaxation toward |0> for ``duration``; excited population decays as ``exp(-duration/t1)``."""
    if not duration >= 0 or not t1 > 0:
        raise InvalidParams("need duration >= 0 and t1 > 0")
    b = _single(rho, qubit)
    b.amplitude_damp(qubit, duration / t1)
    return b.densities()[0]


# ---------------------------------------------------------------------------
# trajectory engine


def _tick_grid(durations: list[float], dt: float) -> tuple[np.ndarray, list[int]]:
    """OU sub-step sizes covering all ticks and the sub-step count of each tick."""
    steps: list[float] = []
    counts: list[int] = []
    for dur in durations:
        k = 0 if dur == 0 else max(1, math.ceil(dur / dt - 1e-9))
        counts.append(k)
        steps.extend([dur / k] * k)
    return np.asarray(steps, dtype=float), counts


def _tick_angles(model: NoiseModel, durations: list[float], seeds: range) -> dict[int, np.ndarray]:
    """Integrated dephasing angle per noisy qubit, shape (B, n_ticks)."""
    qubits = sorted(set(model.ou) | set(model.static))
    out = {q: np.zeros((len(seeds), len(durations))) for q in qubits}
    grids = {q: _tick_grid(durations, p.dt) for q, p in model.ou.items()}
    static_draws = {q: np.empty(len(seeds)) for q in model.static}
    ou_draws = {q: np.empty((len(seeds), len(grids[q][0]) + 1)) for q in model.ou}
    for row, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        for q in sorted(model.static):
            static_draws[q][row] = rng.standard_normal()
        for q in sorted(model.ou):
            ou_draws[q][row] = rng.standard_normal(ou_draws[q].shape[1])
    dur = np.asarray(durations, dtype=float)
    for q, p in model.static.items():
        out[q] += (p.sigma_static * static_draws[q])[:, None] * dur[None, :]
    for q, p in model.ou.items():
        steps, counts = grids[q]
        b = _ou_path(ou_draws[q], p.sigma_b, p.tau_c, steps)
        k = 0
        for m, cnt in enumerate(counts):
            acc = np.zeros(len(seeds))
            for _ in range(cnt):
                acc = acc + b[:, k] * steps[k]
                k += 1
            out[q][:, m] += acc
    return out


def _run_chunk(c: Circuit, model: NoiseModel, initial: np.ndarray, seeds: range, density: bool) -> np.ndarray:
    durations = [g.params[0] for g in c.gates if g.kind == "DELAY"]
    angles = _tick_angles(model, durations, seeds) if model.stochastic else {}
    batch = _Batch(initial, c.n_qubits, len(seeds), density)
    gn = model.gate if model.has_channels else None
    tick = 0
    for g in c.gates:
        if g.kind == "MEASURE_Z":
            continue
        if g.kind == "DELAY":
            for q, a in angles.items():
                batch.apply_rz(a[:, tick], q)
            if gn is not None and gn.t1 is not None and g.params[0] > 0:
                for q in g.targets:
                    batch.amplitude_damp(q, g.params[0] / gn.t1)
            tick += 1
            continue
        batch.apply_gate(g)
        if gn is not None and g.tag != "dd":
            p = gn.p_depol_1q if len(g.targets) == 1 else gn.p_depol_2q
            if p > 0:
                for q in g.targets:
                    batch.depolarize(q, p)
    return batch.densities()


def _check_model(c: Circuit, model: NoiseModel) -> None:
    for q in list(model.ou) + list(model.static):
        if not 0 <= q < c.n_qubits:
            raise RegisterMismatch(f"noise on qubit {q} outside register of {c.n_qubits}")


def monte_carlo_trajectories(
    c: Circuit, model: NoiseModel, initial: np.ndarray, workers: int = 1
) -> np.ndarray:
    """Final density matrix of every trajectory, shape (B, 2**n, 2**n).

    Models without stochastic noise collapse to a single exact trajectory.
    """
    initial = np.asarray(initial, dtype=complex)
    if state_qubits(initial) != c.n_qubits:
        raise RegisterMismatch("initial state and circuit registers differ")
    _check_model(c, model)
    density = model.has_channels or initial.ndim == 2
    total = model.n_trajectories if model.stochastic else 1
    chunks = [
        range(model.base_seed + s, model.base_seed + min(s + CHUNK, total))
        for s in range(0, total, CHUNK)
    ]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _run_chunk(c, model, initial, s, density), chunks))
    else:
        parts = [_run_chunk(c, model, initial, s, density) for s in chunks]
    return np.concatenate(parts, axis=0)


def average(trajectories: np.ndarray) -> np.ndarray:
    """Fixed-order mean over the trajectory axis."""
    acc = np.zeros(trajectories.shape[1:], dtype=complex)
    for rho in trajectories:
        acc += rho
    return acc / len(trajectories)


def monte_carlo_evolve(c: Circuit, model: NoiseModel, initial: np.ndarray, workers: int = 1) -> np.ndarray:
    """Trajectory-averaged density matrix after running ``c`` under ``model``."""
    return average(monte_carlo_trajectories(c, model, initial, workers))
