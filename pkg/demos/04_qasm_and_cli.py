"""Export a preset circuit to OpenQASM 2.0, read it back, and drive the same run from the CLI.

Run: python demos/04_qasm_and_cli.py
"""
import subprocess
import sys
import tempfile
from pathlib import Path

from nvflux.circuit import circuit_unitary, entangling_circuit
from nvflux.hamiltonian import HamiltonianParams
from nvflux.linalg import operator_distance
from nvflux.qasm import export_qasm, parse_qasm

c = entangling_circuit(HamiltonianParams(), 0.05, 2)
text = export_qasm(c)
print("\n".join(text.splitlines()[:12]), "\n  ...")
back = parse_qasm(text)
print(f"re-export identical: {export_qasm(back) == text}")
print(f"unitary distance after round trip: {operator_distance(circuit_unitary(back), circuit_unitary(c)):.1e}")

with tempfile.TemporaryDirectory() as out:
    cmd = [sys.executable, "-m", "nvflux", "relaxation", "--seed", "7", "--out", out]
    subprocess.run(cmd, check=True, capture_output=True)
    print("\nCLI wrote:", sorted(p.name for p in Path(out).iterdir()))
    print(Path(out, "relaxation_ms+1.csv").read_text())
