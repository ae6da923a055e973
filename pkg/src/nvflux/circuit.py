"""Gate-level circuits, the first-order Trotter compiler and preset circuits.

Gate conventions follow OpenQASM 2.0 ``qelib1.inc``: ``u1(l) = diag(1, e^{il})``
and ``u3(t, p, l) = [[cos t/2, -e^{il} sin t/2], [e^{ip} sin t/2, e^{i(p+l)} cos t/2]]``.
``RZ(t)`` is ``exp(-i t Z / 2)``, which equals qelib1's ``rz`` up to a global phase.

Besides unitary gates a circuit carries two kinds of markers:

* ``DELAY`` (one parameter, a duration in microseconds) marks a Trotter-step
  boundary where physical time elapses. It is the identity on the state;
  noise models act there.
* ``MEASURE_Z`` marks readout qubits. Only allowed at the end of a circuit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import EmptySum, IndexOutOfRange, InvalidParams, RegisterMismatch, UnknownKind
from .hamiltonian import (
    HamiltonianParams,
    PauliSum,
    build_extended_hamiltonian,
    build_hamiltonian,
    pauli_decompose,
)
from .linalg import embed, state_qubits

ARITY = {
    "H": (1, 0),
    "X": (1, 0),
    "Y": (1, 0),
    "Z": (1, 0),
    "RX": (1, 1),
    "RY": (1, 1),
    "RZ": (1, 1),
    "U1": (1, 1),
    "U3": (1, 3),
    "CNOT": (2, 0),
    "MEASURE_Z": (1, 0),
    "DELAY": (None, 1),
}
MARKERS = ("DELAY", "MEASURE_Z")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    params: tuple[float, ...] = ()
    tag: str = ""

    def __post_init__(self):
        if self.kind not in ARITY:
            raise UnknownKind(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n_t, n_p = ARITY[self.kind]
        if (n_t is not None and len(self.targets) != n_t) or len(self.params) != n_p:
            raise InvalidParams(f"{self.kind} takes {n_t} targets and {n_p} params")
        if len(set(self.targets)) != len(self.targets):
            raise InvalidParams("gate targets must be distinct")
        if self.kind == "DELAY" and self.params[0] < 0:
            raise InvalidParams("DELAY duration must be non-negative")

    def inverse(self) -> "Gate":
        k, p = self.kind, self.params
        if k in ("H", "X", "Y", "Z", "CNOT") or k in MARKERS:
            return self
        if k == "U3":
            theta, phi, lam = p
            return replace(self, params=(-theta, -lam, -phi))
        return replace(self, params=tuple(-a for a in p))


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    qubit_roles: dict[int, str] = field(default_factory=dict)
    global_phase: float = 0.0

    def __post_init__(self):
        self.gates = list(self.gates)
        self.validate()

    def validate(self) -> None:
        measured: set[int] = set()
        for g in self.gates:
            if any(not 0 <= t < self.n_qubits for t in g.targets):
                raise IndexOutOfRange(f"{g} outside register of {self.n_qubits}")
            if g.kind == "MEASURE_Z":
                if g.targets[0] in measured:
                    raise InvalidParams("qubit measured twice")
                measured.add(g.targets[0])
            elif measured:
                raise InvalidParams("measurements must come last")

    def __len__(self):
        return len(self.gates)

    def append(self, g: Gate) -> None:
        self.gates.append(g)
        self.validate()

    def extend(self, gates) -> None:
        self.gates.extend(gates)
        self.validate()

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.gates), dict(self.qubit_roles), self.global_phase)

    def unitary_gates(self) -> list[Gate]:
        return [g for g in self.gates if g.kind not in MARKERS]

    def measured_qubits(self) -> list[int]:
        return [g.targets[0] for g in self.gates if g.kind == "MEASURE_Z"]

    def duration(self) -> float:
        return sum(g.params[0] for g in self.gates if g.kind == "DELAY")

    def inverse(self) -> "Circuit":
        """Reversed gate list with inverted gates; markers kept, measurements dropped."""
        gates = [g.inverse() for g in reversed(self.gates) if g.kind != "MEASURE_Z"]
        return Circuit(self.n_qubits, gates, dict(self.qubit_roles), -self.global_phase)

    def roles_of(self, role: str) -> list[int]:
        """Qubits whose role equals ``role`` or, for ``"nv"``, starts with ``"nv"``."""
        if role == "nv":
            return sorted(q for q, r in self.qubit_roles.items() if r.startswith("nv"))
        return sorted(q for q, r in self.qubit_roles.items() if r == role)


@dataclass(frozen=True)
class TrotterPlan:
    total_time: float
    steps: int = 1
    order: str = "first"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParams("steps must be an integer >= 1")
        if not self.total_time >= 0:
            raise InvalidParams("total_time must be non-negative")
        if self.order != "first":
            raise InvalidParams("only first-order Trotterization is supported")


_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


def gate_matrix(g: Gate) -> np.ndarray:
    """Unitary of a gate on its own targets (``2**len(targets)`` square)."""
    k = g.kind
    if k in _FIXED:
        return _FIXED[k].copy()
    if k == "RX":
        c, s = math.cos(g.params[0] / 2), math.sin(g.params[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if k == "RY":
        c, s = math.cos(g.params[0] / 2), math.sin(g.params[0] / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if k == "RZ":
        a = g.params[0] / 2
        return np.diag([np.exp(-1j * a), np.exp(1j * a)])
    if k == "U1":
        return np.diag([1.0, np.exp(1j * g.params[0])]).astype(complex)
    if k == "U3":
        return u3_matrix(*g.params)
    if k in MARKERS:
        return np.eye(2 ** len(g.targets), dtype=complex)
    raise UnknownKind(k)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Product of all gate matrices, global phase included."""
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.unitary_gates():
        u = embed(gate_matrix(g), g.targets, c.n_qubits) @ u
    return np.exp(1j * c.global_phase) * u


def _term_order(terms: PauliSum) -> list[tuple[str, float]]:
    return sorted(terms, key=lambda kv: (-abs(kv[1]), kv[0]))


def pauli_exponential_gates(letters: str, angle: float) -> list[Gate]:
    """Gates for ``exp(-i angle/2 P)``, i.e. an RZ(angle) in the string's eigenbasis."""
    active = [q for q, c in enumerate(letters) if c != "I"]
    if not active:
        return []
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in active:
        if letters[q] == "X":
            pre.append(Gate("H", (q,)))
            post.append(Gate("H", (q,)))
        elif letters[q] == "Y":
            pre.append(Gate("RX", (q,), (math.pi / 2,)))
            post.append(Gate("RX", (q,), (-math.pi / 2,)))
    ladder = [Gate("CNOT", (a, b)) for a, b in zip(active, active[1:])]
    return pre + ladder + [Gate("RZ", (active[-1],), (angle,))] + ladder[::-1] + post


def trotterize(terms: PauliSum, plan: TrotterPlan, roles: dict[int, str] | None = None) -> Circuit:
    """Compile ``exp(-i H T)`` into ``steps`` first-order Trotter slices.

    Terms are applied in descending ``|c|`` order (ties: lexicographic). A
    ``DELAY(dt)`` marker closes each slice. Identity strings contribute only
    to ``global_phase``. Zero total time yields an empty circuit.
    """
    if len(terms) == 0:
        raise EmptySum("cannot Trotterize an empty PauliSum")
    c = Circuit(terms.n_qubits, [], dict(roles or {}))
    if plan.total_time == 0:
        return c
    dt = plan.total_time / plan.steps
    ordered = _term_order(terms)
    step: list[Gate] = []
    for letters, coef in ordered:
        step.extend(pauli_exponential_gates(letters, 2 * coef * dt))
    tick = Gate("DELAY", tuple(range(terms.n_qubits)), (dt,))
    gates: list[Gate] = []
    for _ in range(plan.steps):
        gates.extend(step)
        gates.append(tick)
    c.gates = gates
    c.global_phase = -terms.identity_coefficient() * plan.total_time
    return c


ROLES_3Q = {0: "electron", 1: "nitrogen", 2: "flux"}


def extended_roles(n_nv: int) -> dict[int, str]:
    roles = {i: f"nv{i}" for i in range(n_nv)}
    roles[n_nv] = "flux"
    return roles


def build_entangling_circuit(n_qubits: int, u1: Circuit, include_inverse: bool = True) -> Circuit:
    """H on the electron, CNOT fan-out to nitrogen and flux, ``u1`` (and its
    inverse), then a Z measurement of the electron."""
    if n_qubits != 3 or u1.n_qubits != 3:
        raise RegisterMismatch("the entangling circuit acts on three qubits")
    body = [g for g in u1.gates if g.kind != "MEASURE_Z"]
    gates = [Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("CNOT", (0, 2))]
    gates += body
    phase = u1.global_phase
    if include_inverse:
        inv = u1.inverse()
        gates += inv.gates
        phase += inv.global_phase
    gates.append(Gate("MEASURE_Z", (0,)))
    return Circuit(3, gates, dict(ROLES_3Q), phase)


def build_extended_circuit(n_nv: int, u1: Circuit) -> Circuit:
    """H on the flux line, CNOT from flux to every NV, ``u1``, flux readout."""
    if not 1 <= n_nv <= 4:
        raise InvalidParams("n_nv must be in [1, 4]")
    n = n_nv + 1
    if u1.n_qubits != n:
        raise RegisterMismatch(f"u1 acts on {u1.n_qubits} qubits, expected {n}")
    f = n_nv
    gates = [Gate("H", (f,))] + [Gate("CNOT", (f, i)) for i in range(n_nv)]
    gates += [g for g in u1.gates if g.kind != "MEASURE_Z"]
    gates.append(Gate("MEASURE_Z", (f,)))
    return Circuit(n, gates, extended_roles(n_nv), u1.global_phase)


def evolution_circuit(params: HamiltonianParams, total_time: float, steps: int) -> Circuit:
    """Trotterized three-qubit evolution block."""
    terms = pauli_decompose(build_hamiltonian(params))
    return trotterize(terms, TrotterPlan(total_time, steps), ROLES_3Q)


def entangling_circuit(params: HamiltonianParams, total_time: float, steps: int) -> Circuit:
    return build_entangling_circuit(3, evolution_circuit(params, total_time, steps), include_inverse=True)


def extended_block(params: HamiltonianParams, total_time: float, steps: int) -> Circuit:
    terms = pauli_decompose(build_extended_hamiltonian(params))
    return trotterize(terms, TrotterPlan(total_time, steps), extended_roles(params.n_nv))


def extended_circuit(params: HamiltonianParams, total_time: float, steps: int) -> Circuit:
    return build_extended_circuit(params.n_nv, extended_block(params, total_time, steps))


def run_circuit(c: Circuit, initial: np.ndarray) -> np.ndarray:
    """Noise-free execution; returns the same kind of state as ``initial``."""
    from .linalg import apply_unitary

    state = np.asarray(initial, dtype=complex)
    if state_qubits(state) != c.n_qubits:
        raise RegisterMismatch("state and circuit registers differ")
    for g in c.unitary_gates():
        state = apply_unitary(state, gate_matrix(g), g.targets)
    if state.ndim == 1 and c.global_phase:
        state = np.exp(1j * c.global_phase) * state
    return state


def marginal_probabilities(state: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Born probabilities of ``qubits`` (first listed = most significant)."""
    state = np.asarray(state)
    n = state_qubits(state)
    for q in qubits:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} outside register of {n}")
    probs = np.abs(state) ** 2 if state.ndim == 1 else np.real(np.diag(state))
    t = probs.reshape((2,) * n)
    drop = tuple(q for q in range(n) if q not in qubits)
    t = t.sum(axis=drop)
    kept = [q for q in range(n) if q in qubits]
    t = np.transpose(t, [kept.index(q) for q in qubits])
    p = np.clip(t.reshape(-1), 0, None)
    return p / p.sum()


def sample_counts(state: np.ndarray, qubits: Sequence[int], shots: int, seed: int) -> dict[str, int]:
    """Multinomial shot counts for ``qubits``; zero-count outcomes omitted."""
    if shots < 1:
        raise InvalidParams("shots must be >= 1")
    qubits = list(qubits)
    p = marginal_probabilities(state, qubits)
    counts = np.random.default_rng(seed).multinomial(shots, p)
    k = len(qubits)
    return {format(i, f"0{k}b"): int(n) for i, n in enumerate(counts) if n}
