import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvflux.circuit import Circuit, Gate, circuit_unitary, evolution_circuit, entangling_circuit, extended_circuit
from nvflux.decoupling import DDSequence, interleave
from nvflux.errors import QasmError
from nvflux.hamiltonian import HamiltonianParams
from nvflux.qasm import export_qasm, format_real, parse_qasm

# independent line grammar for the OpenQASM 2.0 subset we emit
REAL = r"-?(\d+\.\d*|\d*\.\d+)(e[+-]?\d+)?"
QARG = r"q\[\d+\]"
LINE = re.compile(
    rf"^(OPENQASM 2\.0;|include \"qelib1\.inc\";|qreg q\[\d+\];|creg c\[\d+\];"
    rf"|(h|x|y|z|cx)( {QARG}(,{QARG})*);"
    rf"|(rx|ry|rz|u1)\({REAL}\) {QARG};"
    rf"|u3\({REAL},{REAL},{REAL}\) {QARG};"
    rf"|measure {QARG} -> c\[\d+\];"
    rf"|barrier (q|{QARG}(,{QARG})*);)"
    rf"( //.*)?$|^//.*$"
)

P = HamiltonianParams()
PRESETS = {
    "evolution": evolution_circuit(P, 0.05, 4),
    "entangling": entangling_circuit(P, 0.05, 4),
    "extended_n1": extended_circuit(HamiltonianParams(n_nv=1), 0.05, 4),
    "extended_n3": extended_circuit(HamiltonianParams(n_nv=3), 0.3, 2),
    "extended_n4": extended_circuit(HamiltonianParams(n_nv=4), 0.3, 2),
}


def test_empty_circuit_is_header_only():
    assert export_qasm(Circuit(1)).splitlines() == ['OPENQASM 2.0;', 'include "qelib1.inc";', "qreg q[1];", "creg c[1];"]


def test_direct_mapping():
    lines = export_qasm(Circuit(2, [Gate("H", (0,)), Gate("CNOT", (0, 1))])).splitlines()
    assert lines[-2:] == ["h q[0];", "cx q[0],q[1];"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip_byte_identical(name):
    text = export_qasm(PRESETS[name])
    again = parse_qasm(text)
    assert export_qasm(again) == text
    assert again.gates == PRESETS[name].gates
    assert again.qubit_roles == PRESETS[name].qubit_roles
    assert again.global_phase == PRESETS[name].global_phase


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_grammar(name):
    text = export_qasm(PRESETS[name])
    bad = [line for line in text.splitlines() if not LINE.match(line)]
    assert not bad
    assert text.isascii() and text.endswith("\n")


def test_tags_and_partial_barriers_survive():
    c = interleave(evolution_circuit(P, 0.05, 4), DDSequence("xy4", 4, 0.05), 0, 0.05 / 4)
    c.gates.insert(0, Gate("DELAY", (0, 2), (0.5,)))
    assert parse_qasm(export_qasm(c)).gates == c.gates


def test_unitary_preserved():
    c = PRESETS["entangling"]
    assert np.array_equal(circuit_unitary(parse_qasm(export_qasm(c))), circuit_unitary(c))


reals = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(reals)
def test_format_real_round_trips(x):
    s = format_real(x)
    assert float(s) == x and re.fullmatch(REAL, s)


@given(st.lists(st.tuples(st.sampled_from(["RX", "RY", "RZ", "U1", "U3", "H", "CNOT"]), reals, reals, reals), max_size=20))
def test_random_circuits_idempotent(spec):
    gates = []
    for kind, a, b, c in spec:
        if kind == "U3":
            gates.append(Gate(kind, (1,), (a, b, c)))
        elif kind in ("H", "CNOT"):
            gates.append(Gate(kind, (0, 2) if kind == "CNOT" else (2,)))
        else:
            gates.append(Gate(kind, (0,), (a,)))
    c = Circuit(3, gates + [Gate("MEASURE_Z", (0,))], {0: "electron"})
    once = export_qasm(c)
    assert export_qasm(parse_qasm(once)) == once


def test_non_finite_angle():
    with pytest.raises(QasmError):
        export_qasm(Circuit(1, [Gate("RZ", (0,), (math.inf,))]))


@pytest.mark.parametrize("text", [
    "OPENQASM 2.0;\nh q[0];\n",
    "OPENQASM 2.0;\nqreg q[1];\nccx q[0];\n",
    "OPENQASM 2.0;\nqreg q[1];\nrz(abc) q[0];\n",
    "OPENQASM 2.0;\nqreg q[1];\nbarrier q;\n",
    "OPENQASM 2.0;\nqreg q[1];\nh q[3];\n",
    "OPENQASM 2.0;\nqreg q;\n",
    "OPENQASM 2.0;\n",
])
def test_parse_errors(text):
    with pytest.raises(QasmError):
        parse_qasm(text)
