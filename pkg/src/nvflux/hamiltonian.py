"""NV-centre / flux-qubit Hamiltonians and their Pauli decompositions.

Energies are angular frequencies in MHz (hbar = 1), so ``energy * time``
with time in microseconds is a phase in radians.

Spin-1 operators are truncated to the {m=+1, m=0} doublet: ``m=+1`` is
encoded as |1>, ``m=0`` as |0>, and ``Sz -> diag(0, 1)`` in the
computational basis. Consequently ``Sz**2 == Sz`` on the register.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import InvalidParams, NonHermitian
from .linalg import I2, X, Z, is_hermitian, n_qubits_of, pauli_string_matrix, tensor_product

SZ = np.diag([0.0, 1.0]).astype(complex)

# values published for the three-qubit model; everything else is a default
PAPER_VALUES = {
    "d_zfs": 2.87e3,
    "gamma_e": 2.8,
    "gamma_n": 0.3077e-3,
    "q_quad": -5.1,
    "j_c": 14.0,
    "j_n": 2.1,
}


@dataclass(frozen=True)
class SpinEncoding:
    """Which spin-1 levels map onto |1> and |0>."""

    excited: int = 1
    ground: int = 0

    def __post_init__(self):
        if self.excited == self.ground or {self.excited, self.ground} - {-1, 0, 1}:
            raise InvalidParams("encoding needs two distinct levels from {-1, 0, 1}")


@dataclass(frozen=True)
class HamiltonianParams:
    d_zfs: float = 2.87e3
    gamma_e: float = 2.8
    gamma_n: float = 0.3077e-3
    b0: float = 0.0
    q_quad: float = -5.1
    j_c: float = 14.0
    j_n: float = 2.1
    delta: float = 100.0
    g_f: float = 1.0
    n_nv: int = 1
    electron: SpinEncoding = field(default_factory=SpinEncoding)
    nitrogen: SpinEncoding = field(default_factory=SpinEncoding)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float) and not math.isfinite(v):
                raise InvalidParams(f"{f.name} must be finite")
        if not self.d_zfs > 0:
            raise InvalidParams("d_zfs must be positive")
        if not 1 <= int(self.n_nv) <= 4 or int(self.n_nv) != self.n_nv:
            raise InvalidParams("n_nv must be an integer in [1, 4]")

    def numeric(self) -> dict:
        d = asdict(self)
        d.pop("electron")
        d.pop("nitrogen")
        return d

    def provenance(self) -> dict:
        """Map each numeric field to 'paper' or 'default'."""
        out = {}
        for k, v in self.numeric().items():
            out[k] = "paper" if PAPER_VALUES.get(k) == v else "default"
        return out


def _op(n: int, placed: dict[int, np.ndarray]) -> np.ndarray:
    return tensor_product(*(placed.get(q, I2) for q in range(n)))


def build_hamiltonian(params: HamiltonianParams) -> np.ndarray:
    """8x8 Hamiltonian of electron (qubit 0), 14N (qubit 1) and flux qubit (2).

    Every term of the model is kept as written, including the
    ``Q (delta/2 sx)^2`` term, which is the constant ``Q delta^2 / 4``.
    """
    if params.n_nv != 1:
        raise InvalidParams("build_hamiltonian is the single-NV model; use build_extended_hamiltonian")
    p = params
    n = 3
    sx_half = p.delta / 2 * X
    h = (
        p.d_zfs * _op(n, {0: SZ @ SZ})
        + p.gamma_e * p.b0 * _op(n, {0: SZ})
        - p.gamma_n * p.b0 * _op(n, {1: SZ})
        - p.b0 * _op(n, {2: sx_half})
        + p.q_quad * _op(n, {2: sx_half @ sx_half})
        - _op(n, {2: sx_half})
        + p.j_c * p.g_f * _op(n, {0: SZ, 2: Z})
        + p.j_n * _op(n, {0: SZ, 1: SZ})
    )
    return h


def build_extended_hamiltonian(params: HamiltonianParams) -> np.ndarray:
    """Hamiltonian of ``n_nv`` NV electrons (qubits 0..n-1) and a flux qubit (last).

    Nitrogen spins are left out of the register; no direct NV-NV coupling.
    """
    p = params
    n = p.n_nv + 1
    f = n - 1
    sx_half = p.delta / 2 * X
    h = p.q_quad * (p.delta**2 / 4) * np.eye(2**n, dtype=complex)
    h = h - (1 + p.b0) * _op(n, {f: sx_half})
    for i in range(p.n_nv):
        h = h + p.d_zfs * _op(n, {i: SZ @ SZ})
        h = h + p.gamma_e * p.b0 * _op(n, {i: SZ})
        h = h + p.j_c * p.g_f * _op(n, {i: SZ, f: Z})
    return h


class PauliSum:
    """Real-weighted sum of Pauli strings, e.g. ``{"ZIZ": 7.0, "IIX": -50.0}``."""

    def __init__(self, n_qubits: int, terms: dict[str, float] | None = None):
        self.n_qubits = int(n_qubits)
        self.terms: dict[str, float] = {}
        for letters, c in (terms or {}).items():
            if len(letters) != self.n_qubits or set(letters) - set("IXYZ"):
                raise InvalidParams(f"bad Pauli string {letters!r}")
            if not math.isfinite(c):
                raise InvalidParams("coefficients must be finite")
            self.terms[letters] = float(c)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __repr__(self):
        return f"PauliSum({self.n_qubits}, {self.terms!r})"

    def to_matrix(self) -> np.ndarray:
        d = 2**self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        for letters, c in self.terms.items():
            out += c * pauli_string_matrix(letters)
        return out

    def identity_coefficient(self) -> float:
        return self.terms.get("I" * self.n_qubits, 0.0)


def pauli_decompose(h: np.ndarray, cutoff: float = 1e-12) -> PauliSum:
    """Coefficients ``Tr(P h) / 2**n`` for every Pauli string ``P``."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise NonHermitian("can only decompose Hermitian operators")
    n = n_qubits_of(h.shape[0])
    terms = {}
    for letters in itertools.product("IXYZ", repeat=n):
        s = "".join(letters)
        c = np.einsum("ij,ji->", pauli_string_matrix(s), h) / 2**n
        if abs(c) >= cutoff:
            terms[s] = float(c.real)
    return PauliSum(n, terms)
