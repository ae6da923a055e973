"""OpenQASM 2.0 export and a minimal reader for the subset we emit.

Non-gate information rides in trailing ``//`` comments so standard parsers
ignore it while our reader can restore it exactly:

* ``// roles: 0=electron 1=nitrogen 2=flux`` and ``// global_phase: x``
  header lines,
* ``barrier q; // delay: dt`` for Trotter-step markers,
* ``x q[0]; // tag: dd`` for gates carrying a tag.
"""
from __future__ import annotations

import re

from .circuit import Circuit, Gate
from .errors import NVFluxError, QasmError

_NAMES = {
    "H": "h",
    "X": "x",
    "Y": "y",
    "Z": "z",
    "RX": "rx",
    "RY": "ry",
    "RZ": "rz",
    "U1": "u1",
    "U3": "u3",
    "CNOT": "cx",
}
_KINDS = {v: k for k, v in _NAMES.items()}


def format_real(x: float) -> str:
    """Shortest round-tripping decimal that is also a valid QASM real literal."""
    s = repr(float(x))
    if s in ("inf", "-inf", "nan"):
        raise QasmError(f"cannot export non-finite angle {s}")
    if "e" in s and "." not in s.split("e")[0]:
        mant, exp = s.split("e")
        s = f"{mant}.0e{exp}"
    return s


def export_qasm(c: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    if c.qubit_roles:
        roles = " ".join(f"{q}={r}" for q, r in sorted(c.qubit_roles.items()))
        lines.append(f"// roles: {roles}")
    if c.global_phase:
        lines.append(f"// global_phase: {format_real(c.global_phase)}")
    lines.append(f"qreg q[{c.n_qubits}];")
    lines.append(f"creg c[{c.n_qubits}];")
    for g in c.gates:
        if g.kind == "DELAY":
            if len(g.targets) == c.n_qubits and list(g.targets) == list(range(c.n_qubits)):
                args = "q"
            else:
                args = ",".join(f"q[{t}]" for t in g.targets)
            line = f"barrier {args}; // delay: {format_real(g.params[0])}"
        elif g.kind == "MEASURE_Z":
            t = g.targets[0]
            line = f"measure q[{t}] -> c[{t}];"
        else:
            name = _NAMES[g.kind]
            if g.params:
                name += "(" + ",".join(format_real(p) for p in g.params) + ")"
            line = name + " " + ",".join(f"q[{t}]" for t in g.targets) + ";"
        if g.tag:
            line += f" // tag: {g.tag}"
        lines.append(line)
    return "\n".join(lines) + "\n"


_STMT = re.compile(r"^(?P<name>[a-z0-9]+)(\((?P<params>[^)]*)\))?\s+(?P<args>[^;]*);\s*(//\s*(?P<note>.*))?$")
_QARG = re.compile(r"^q\[(\d+)\]$")


def _qubits(args: str, n: int) -> tuple[int, ...]:
    if args.strip() == "q":
        return tuple(range(n))
    out = []
    for a in args.split(","):
        m = _QARG.match(a.strip())
        if not m:
            raise QasmError(f"bad qubit argument {a!r}")
        out.append(int(m.group(1)))
    return tuple(out)


def parse_qasm(text: str) -> Circuit:
    """Read back a program produced by :func:`export_qasm`."""
    n = None
    roles: dict[int, str] = {}
    phase = 0.0
    gates: list[Gate] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line in ("OPENQASM 2.0;", 'include "qelib1.inc";'):
            continue
        if line.startswith("//"):
            body = line[2:].strip()
            if body.startswith("roles:"):
                for item in body[len("roles:") :].split():
                    q, r = item.split("=", 1)
                    roles[int(q)] = r
            elif body.startswith("global_phase:"):
                phase = float(body.split(":", 1)[1])
            continue
        if line.startswith("qreg"):
            m = re.match(r"^qreg q\[(\d+)\];$", line)
            if not m or n is not None:
                raise QasmError(f"bad or repeated register declaration {line!r}")
            n = int(m.group(1))
            continue
        if line.startswith("creg"):
            continue
        if n is None:
            raise QasmError("statement before qreg declaration")
        m = re.match(r"^measure q\[(\d+)\] -> c\[(\d+)\];", line)
        if m:
            gates.append(Gate("MEASURE_Z", (int(m.group(1)),)))
            continue
        m = _STMT.match(line)
        if not m:
            raise QasmError(f"cannot parse {line!r}")
        name, note = m.group("name"), m.group("note") or ""
        try:
            params = tuple(float(p) for p in m.group("params").split(",")) if m.group("params") else ()
            targets = _qubits(m.group("args"), n)
            gate = _gate(name, targets, params, note)
        except (ValueError, NVFluxError) as exc:
            raise QasmError(f"cannot parse {line!r}: {exc}") from exc
        gates.append(gate)
    if n is None:
        raise QasmError("missing qreg declaration")
    try:
        return Circuit(n, gates, roles, phase)
    except NVFluxError as exc:
        raise QasmError(str(exc)) from exc


def _gate(name: str, targets: tuple[int, ...], params: tuple[float, ...], note: str) -> Gate:
    tag = note.split(":", 1)[1].strip() if note.startswith("tag:") else ""
    if name == "barrier":
        if not note.startswith("delay:"):
            raise QasmError("barrier without delay annotation")
        return Gate("DELAY", targets, (float(note.split(":", 1)[1]),))
    if name in _KINDS:
        return Gate(_KINDS[name], targets, params, tag)
    raise QasmError(f"unsupported gate {name!r}")
