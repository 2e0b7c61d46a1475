"""Standard gates, qubit embedding, and the built-in Hamiltonians/targets.

Conventions (fixed once, used everywhere):

* Rotations use the half-angle form: ``RY(t) = exp(-1j*t*Y/2)``,
  ``RZ(t) = exp(-1j*t*Z/2)``; ``CPHASE(t) = diag(1, 1, 1, e^{1j*t})``.
* Two-qubit gates listed as ``(a, b)`` put qubit ``a`` on the more
  significant bit of the 4-dim block (control first for CNOT).
* Spin operators are bare Paulis (sigma, not sigma/2). The Heisenberg bond
  is ``XX + YY + ZZ``; the TFIM is ``-J sum ZZ - h sum X``; the MaxCut cost
  Hamiltonian is ``sum_{(i,j) in E} (Z_i Z_j - 1)/2`` so its minimum equals
  minus the maximum cut.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .linalg import ValidationError, check_dim, kron, matexp_hermitian

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


class GateKind(str, Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    T = "t"
    RY = "ry"
    RZ = "rz"
    CNOT = "cx"
    CPHASE = "cp"
    SWAP = "swap"
    HAM_EVO = "ham_evo"
    FROZEN = "frozen"


PARAMETERIZED_KINDS = {GateKind.RY, GateKind.RZ, GateKind.CPHASE, GateKind.HAM_EVO}
TWO_QUBIT_KINDS = {GateKind.CNOT, GateKind.CPHASE, GateKind.SWAP}

_FIXED_1Q = {
    GateKind.H: HADAMARD,
    GateKind.X: PAULI_X,
    GateKind.Y: PAULI_Y,
    GateKind.Z: PAULI_Z,
    GateKind.S: np.diag([1, 1j]).astype(np.complex128),
    GateKind.T: np.diag([1, np.exp(1j * np.pi / 4)]).astype(np.complex128),
}


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string, e.g. 0.5 * 'XZIX'."""

    coefficient: float
    paulis: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValidationError(f"non-finite coefficient {self.coefficient}")
        bad = set(self.paulis) - set("IXYZ")
        if bad:
            raise ValidationError(f"invalid Pauli letters {bad} in {self.paulis!r}")


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Hermitian operator as a sum of Pauli strings on n qubits."""

    n: int
    terms: tuple[PauliTerm, ...]
    name: str = ""

    def __post_init__(self):
        for t in self.terms:
            if len(t.paulis) != self.n:
                raise ValidationError(
                    f"term {t.paulis!r} has length {len(t.paulis)}, expected {self.n}"
                )

    def matrix(self) -> np.ndarray:
        return hamiltonian_matrix(self)


def rotation(pauli: np.ndarray, angle: float) -> np.ndarray:
    """exp(-1j*angle*P/2) for a single Pauli P; uses P^2 = I."""
    return np.cos(angle / 2) * np.eye(pauli.shape[0]) - 1j * np.sin(angle / 2) * pauli


def base_unitary(kind: GateKind, angle: "float | None" = None) -> np.ndarray:
    """The conventional matrix of a named gate (2x2 or 4x4).

    HAM_EVO and FROZEN carry payloads beyond an angle and are built through
    the scaffold slot machinery, not here.
    """
    parameterized = kind in PARAMETERIZED_KINDS
    if parameterized and angle is None:
        raise ValidationError(f"{kind.value} requires an angle")
    if not parameterized and angle is not None:
        raise ValidationError(f"{kind.value} takes no angle")
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind].copy()
    if kind is GateKind.RY:
        return rotation(PAULI_Y, angle)
    if kind is GateKind.RZ:
        return rotation(PAULI_Z, angle)
    if kind is GateKind.CNOT:
        return CNOT.copy()
    if kind is GateKind.SWAP:
        return SWAP.copy()
    if kind is GateKind.CPHASE:
        return np.diag([1, 1, 1, np.exp(1j * angle)]).astype(np.complex128)
    raise ValidationError(f"base_unitary cannot build {kind.value} without its payload")


def embed_index_map(qubits: "tuple[int, ...]", n: int) -> np.ndarray:
    """Basis-index table for placing a |qubits|-local operator in n qubits.

    Entry ``[u, r]`` is the full-register index whose bits on ``qubits``
    (in listed order, first = most significant of the local block) spell
    ``u`` and whose remaining bits spell ``r``.
    """
    k = len(qubits)
    if len(set(qubits)) != k:
        raise ValidationError(f"duplicate qubit indices in {qubits}")
    if any(q < 0 or q >= n for q in qubits):
        raise ValidationError(f"qubit indices {qubits} out of range for n={n}")
    rest = [q for q in range(n) if q not in qubits]
    u = np.arange(2**k, dtype=np.int64)
    r = np.arange(2 ** (n - k), dtype=np.int64)
    iu = np.zeros_like(u)
    for pos, q in enumerate(qubits):
        iu |= ((u >> (k - 1 - pos)) & 1) << (n - 1 - q)
    ir = np.zeros_like(r)
    for pos, q in enumerate(rest):
        ir |= ((r >> (n - k - 1 - pos)) & 1) << (n - 1 - q)
    return iu[:, None] | ir[None, :]


def embed(u: np.ndarray, qubits: "tuple[int, ...] | list[int]", n: int) -> np.ndarray:
    """Extend a local operator to the full n-qubit register.

    Acts as ``u`` on the listed qubits (in listed order) and as identity on
    the rest; handles non-adjacent and reversed qubit lists.
    """
    qubits = tuple(qubits)
    k = len(qubits)
    if u.shape != (2**k, 2**k):
        raise ValidationError(
            f"operator shape {u.shape} does not match {k} qubits"
        )
    check_dim(2**n, "embed")
    amap = embed_index_map(qubits, n)
    out = np.zeros((2**n, 2**n), dtype=np.complex128)
    out[amap[:, None, :], amap[None, :, :]] = u[:, :, None]
    return out


def hamiltonian_matrix(spec: HamiltonianSpec) -> np.ndarray:
    check_dim(2**spec.n, "hamiltonian_matrix")
    out = np.zeros((2**spec.n, 2**spec.n), dtype=np.complex128)
    for term in spec.terms:
        m = np.array([[1.0]], dtype=np.complex128)
        for ch in term.paulis:
            m = kron(m, PAULIS[ch])
        out += term.coefficient * m
    return out


def pauli_decompose(h: np.ndarray, n: int, tol: float = 1e-12, name: str = "") -> HamiltonianSpec:
    """Expand a Hermitian operator in the Pauli-string basis (small n only)."""
    if n > 6:
        raise ValidationError("pauli_decompose is meant for n <= 6")
    d = 2**n
    letters = "IXYZ"
    terms = []

    def strings(depth, acc):
        if depth == n:
            yield acc
            return
        for ch in letters:
            yield from strings(depth + 1, acc + ch)

    for s in strings(0, ""):
        m = np.array([[1.0]], dtype=np.complex128)
        for ch in s:
            m = np.kron(m, PAULIS[ch])
        c = np.trace(m @ h).real / d
        if abs(c) > tol:
            terms.append(PauliTerm(float(c), s))
    return HamiltonianSpec(n, tuple(terms), name=name)


# ---------------------------------------------------------------------------
# Built-in Hamiltonians
# ---------------------------------------------------------------------------


def _string(n: int, placed: "dict[int, str]") -> str:
    return "".join(placed.get(i, "I") for i in range(n))


def _heisenberg_bond_terms(n: int, i: int, j: int, coeff: float = 1.0):
    return [PauliTerm(coeff, _string(n, {i: p, j: p})) for p in "XYZ"]


def heisenberg_chain(n: int, coupling: float = 1.0) -> HamiltonianSpec:
    terms = []
    for i in range(n - 1):
        terms += _heisenberg_bond_terms(n, i, i + 1, coupling)
    return HamiltonianSpec(n, tuple(terms), name=f"heisenberg_chain(n={n})")


def heisenberg_odd(n: int, coupling: float = 1.0) -> HamiltonianSpec:
    """Bonds (0,1), (2,3), ... — the first, third, ... bonds of the chain."""
    terms = []
    for i in range(0, n - 1, 2):
        terms += _heisenberg_bond_terms(n, i, i + 1, coupling)
    return HamiltonianSpec(n, tuple(terms), name=f"heisenberg_odd(n={n})")


def heisenberg_even(n: int, coupling: float = 1.0) -> HamiltonianSpec:
    """Bonds (1,2), (3,4), ... — the complementary half of the chain."""
    terms = []
    for i in range(1, n - 1, 2):
        terms += _heisenberg_bond_terms(n, i, i + 1, coupling)
    return HamiltonianSpec(n, tuple(terms), name=f"heisenberg_even(n={n})")


def heisenberg_bond(n: int, i: int, j: int, coupling: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(
        n, tuple(_heisenberg_bond_terms(n, i, j, coupling)), name=f"heisenberg_bond({i},{j})"
    )


def tfim_chain(n: int, coupling: float = 1.0, field: float = 1.0) -> HamiltonianSpec:
    """Open-chain transverse-field Ising model -J sum ZZ - h sum X."""
    terms = [
        PauliTerm(-coupling, _string(n, {i: "Z", i + 1: "Z"})) for i in range(n - 1)
    ]
    terms += [PauliTerm(-field, _string(n, {i: "X"})) for i in range(n)]
    return HamiltonianSpec(n, tuple(terms), name=f"tfim_chain(n={n},J={coupling},h={field})")


def j1j2_chain(n: int, j1: float = 1.0, j2: float = 0.5) -> HamiltonianSpec:
    """Frustrated chain: nearest-neighbor j1 bonds plus next-nearest j2 bonds."""
    terms = []
    for i in range(n - 1):
        terms += _heisenberg_bond_terms(n, i, i + 1, j1)
    for i in range(n - 2):
        terms += _heisenberg_bond_terms(n, i, i + 2, j2)
    return HamiltonianSpec(n, tuple(terms), name=f"j1j2_chain(n={n},j1={j1},j2={j2})")


def maxcut(n: int, edges: "list[tuple[int, int]] | None" = None) -> HamiltonianSpec:
    """MaxCut cost Hamiltonian; minimizing it maximizes the cut.

    Default graph is the n-node ring. Each edge contributes
    (Z_i Z_j - 1)/2, i.e. -1 when the edge is cut and 0 when it is not.
    """
    if edges is None:
        edges = [(i, (i + 1) % n) for i in range(n)]
    terms = []
    for i, j in edges:
        terms.append(PauliTerm(0.5, _string(n, {i: "Z", j: "Z"})))
        terms.append(PauliTerm(-0.5, "I" * n))
    return HamiltonianSpec(n, tuple(terms), name=f"maxcut(n={n},|E|={len(edges)})")


def x_mixer(n: int) -> HamiltonianSpec:
    """QAOA transverse mixer sum_i X_i."""
    terms = tuple(PauliTerm(1.0, _string(n, {i: "X"})) for i in range(n))
    return HamiltonianSpec(n, terms, name=f"x_mixer(n={n})")


def ghz_projector(n: int) -> HamiltonianSpec:
    """-|GHZ><GHZ| as a Pauli sum; unique ground state is the GHZ state at -1."""
    ghz = ghz_target(n)
    return pauli_decompose(-np.outer(ghz, ghz.conj()), n, name=f"ghz_projector(n={n})")


_BUILTIN_HAMILTONIANS = {
    "heisenberg_chain": heisenberg_chain,
    "heisenberg_odd": heisenberg_odd,
    "heisenberg_even": heisenberg_even,
    "heisenberg_bond": heisenberg_bond,
    "tfim_chain": tfim_chain,
    "j1j2_chain": j1j2_chain,
    "maxcut": maxcut,
    "x_mixer": x_mixer,
    "ghz_projector": ghz_projector,
}


def builtin_hamiltonian(name: str, **params) -> HamiltonianSpec:
    try:
        builder = _BUILTIN_HAMILTONIANS[name]
    except KeyError:
        raise ValidationError(
            f"unknown Hamiltonian {name!r}; available: {sorted(_BUILTIN_HAMILTONIANS)}"
        ) from None
    return builder(**params)


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


def trotter_gate(spec: HamiltonianSpec, t: float) -> np.ndarray:
    """exp(-1j * H * t) for a Pauli-sum Hamiltonian."""
    return matexp_hermitian(hamiltonian_matrix(spec), t)


def qft_target(n: int) -> np.ndarray:
    """The 2^n-dimensional discrete Fourier transform unitary."""
    if n > 6:
        raise ValidationError("qft_target supports n <= 6")
    d = 2**n
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(2j * np.pi * j * k / d) / np.sqrt(d)


def canonical_qft_gates(n: int) -> "list[tuple[GateKind, tuple[int, ...], float | None]]":
    """The textbook H/CPHASE/SWAP realization of qft_target(n).

    12 gates for n=4. Gates are listed in application order.
    """
    gates: list[tuple[GateKind, tuple[int, ...], float | None]] = []
    for j in range(n):
        gates.append((GateKind.H, (j,), None))
        for k in range(j + 1, n):
            gates.append((GateKind.CPHASE, (k, j), np.pi / 2 ** (k - j)))
    for j in range(n // 2):
        gates.append((GateKind.SWAP, (j, n - 1 - j), None))
    return gates


def ghz_target(n: int) -> np.ndarray:
    """(|0...0> + |1...1>)/sqrt(2)."""
    if n < 2:
        raise ValidationError("GHZ state needs n >= 2")
    psi = np.zeros(2**n, dtype=np.complex128)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi
