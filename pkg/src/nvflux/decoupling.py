"""Dynamical-decoupling sequences interleaved into Trotter circuits.

Pulses are ideal, instantaneous pi rotations (tagged ``"dd"`` so the noise
engine skips gate errors on them). They snap to the nearest Trotter-step
boundary, so placement error is at most half a step.

To keep the noise-free evolution unchanged, every later gate that touches the
decoupled qubit is conjugated by the accumulated Pauli frame, and a final
frame-correcting pulse is appended when the frame is not the identity.
Dephasing at step boundaries is *not* conjugated; that sign flip is what
refocuses slow noise.
"""
from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, Gate
from .errors import InvalidSequence, WindowTooLong

KINDS = ("none", "echo", "cpmg", "xy4")

# Pauli letters as (x, z) bits; products ignore phase
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_LETTER = {v: k for k, v in _BITS.items()}


def _mul(a: str, b: str) -> str:
    (xa, za), (xb, zb) = _BITS[a], _BITS[b]
    return _LETTER[(xa ^ xb, za ^ zb)]


@dataclass(frozen=True)
class DDSequence:
    kind: str = "none"
    n_pulses: int = 0
    total_window: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSequence(f"unknown sequence kind {self.kind!r}")
        if self.kind == "none":
            return
        if self.total_window <= 0:
            raise InvalidSequence("total_window must be positive")
        if self.kind == "echo" and self.n_pulses != 1:
            raise InvalidSequence("an echo has exactly one pulse")
        if self.kind == "cpmg" and self.n_pulses < 1:
            raise InvalidSequence("CPMG needs at least one pulse")
        if self.kind == "xy4" and (self.n_pulses < 4 or self.n_pulses % 4):
            raise InvalidSequence("XY-4 needs a positive multiple of 4 pulses")

    def axes(self) -> list[str]:
        if self.kind == "xy4":
            return ["X", "Y"] * (self.n_pulses // 2)
        return ["X"] * (self.n_pulses if self.kind != "none" else 0)


def pulse_times(seq: DDSequence) -> list[float]:
    """``T (2k - 1) / (2N)`` for ``k = 1..N``; empty for ``kind="none"``."""
    if seq.kind == "none":
        return []
    n, t = seq.n_pulses, seq.total_window
    return [t * (2 * k - 1) / (2 * n) for k in range(1, n + 1)]


def _conjugated(g: Gate, frame: str, target: int) -> list[Gate]:
    if frame == "I" or target not in g.targets or g.kind in ("DELAY", "MEASURE_Z"):
        return [g]
    if g.kind in ("RZ", "U1") and frame in "XY":
        return [Gate(g.kind, g.targets, (-g.params[0],), g.tag)]
    if g.kind == "Z":
        return [g]
    pulse = Gate(frame, (target,), tag="dd")
    return [pulse, g, pulse]


def interleave(c: Circuit, seq: DDSequence, target: int, step_duration: float) -> Circuit:
    """Insert the pulses of ``seq`` on ``target``; the window starts at time 0."""
    if seq.kind == "none":
        return c.copy()
    delays = [i for i, g in enumerate(c.gates) if g.kind == "DELAY"]
    span = len(delays) * step_duration
    if seq.total_window > span * (1 + 1e-12):
        raise WindowTooLong(f"window {seq.total_window} exceeds circuit span {span}")
    # insertion point: before the first tick for m = 0, else right after tick m
    schedule: dict[int, list[str]] = {}
    for t, axis in zip(pulse_times(seq), seq.axes()):
        m = int(round(t / step_duration))
        pos = delays[0] if m == 0 else delays[m - 1] + 1
        schedule.setdefault(pos, []).append(axis)

    out: list[Gate] = []
    frame = "I"
    body = [g for g in c.gates if g.kind != "MEASURE_Z"]
    for i, g in enumerate(body + [None]):
        for axis in schedule.get(i, []):
            out.append(Gate(axis, (target,), tag="dd"))
            frame = _mul(axis, frame)
        if g is not None:
            out.extend(_conjugated(g, frame, target))
    if frame != "I":
        out.append(Gate(frame, (target,), tag="dd"))
    out.extend(g for g in c.gates if g.kind == "MEASURE_Z")
    return Circuit(c.n_qubits, out, dict(c.qubit_roles), c.global_phase)


def idle_circuit(n_qubits: int, steps: int, step_duration: float, roles=None) -> Circuit:
    """``steps`` bare time steps, useful as a free-evolution carrier."""
    tick = Gate("DELAY", tuple(range(n_qubits)), (step_duration,))
    return Circuit(n_qubits, [tick] * steps, dict(roles or {}))
