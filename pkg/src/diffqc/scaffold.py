"""The differentiable circuit scaffold.

A scaffold is an ordered list of candidate gate slots. Each slot carries a
structural logit whose sigmoid is the slot's "switch" s in (0, 1); the
effective gate interpolates between identity (s=0) and the slot's unitary
(s=1), either linearly, (1-s)*I + s*G, or along the unitary group geodesic,
G^s. Slot 0 is applied to the state first, i.e. it is the rightmost factor
of the full matrix product.

Slots marked ``frozen`` contribute their fixed unitary regardless of the
logit and receive no gradient; this is how previously discovered motifs are
composed into larger scaffolds.
"""

import copy as _copy
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import expit

from . import _kernels as kernels
from .gates import (
    PARAMETERIZED_KINDS,
    GateKind,
    HamiltonianSpec,
    base_unitary,
    embed,
    hamiltonian_matrix,
)
from .linalg import ValidationError, check_dim

UNDECIDED_BAND = (0.01, 0.99)  # switches in this band signal non-convergence


def switch(logit: float) -> float:
    """Structural logit -> gate switch, sigma(logit) in (0, 1)."""
    return float(expit(logit))


def switch_derivative(s: "float | np.ndarray"):
    return s * (1.0 - s)


@dataclass
class GateSpec:
    """One scaffold slot.

    ``hamiltonian`` (HAM_EVO payload) is local to the listed qubits; the
    slot embeds it. ``matrix`` is the FROZEN payload, with ``source``
    optionally holding the circuit it was frozen from (used to expand the
    motif when exporting). ``angle`` is the initial angle for parameterized
    kinds; set ``learn_angle=False`` to keep it fixed during training.
    """

    kind: GateKind
    qubits: tuple
    angle: "float | None" = None
    hamiltonian: "HamiltonianSpec | None" = None
    matrix: "np.ndarray | None" = None
    cost: float = 1.0
    frozen: bool = False
    learn_angle: bool = True
    label: str = ""
    source: "DiscreteCircuit | None" = None

    def __post_init__(self):
        self.qubits = tuple(self.qubits)
        parameterized = self.kind in PARAMETERIZED_KINDS
        if parameterized and self.angle is None:
            raise ValidationError(f"slot {self.kind.value} needs an initial angle")
        if not parameterized and self.angle is not None:
            raise ValidationError(f"slot {self.kind.value} takes no angle")
        if self.kind is GateKind.HAM_EVO and self.hamiltonian is None:
            raise ValidationError("HAM_EVO slot needs a Hamiltonian")
        if self.kind is GateKind.FROZEN and self.matrix is None:
            raise ValidationError("FROZEN slot needs a matrix")

    @property
    def parameterized(self) -> bool:
        return self.kind in PARAMETERIZED_KINDS


@dataclass
class DiscreteGate:
    kind: GateKind
    qubits: tuple
    angle: "float | None" = None
    hamiltonian: "HamiltonianSpec | None" = None
    matrix: "np.ndarray | None" = None
    source: "DiscreteCircuit | None" = None
    label: str = ""

    def local_unitary(self) -> np.ndarray:
        if self.kind is GateKind.FROZEN:
            return self.matrix
        if self.kind is GateKind.HAM_EVO:
            return _ham_evo_unitary(self.hamiltonian, self.angle)
        if self.kind in PARAMETERIZED_KINDS:
            return base_unitary(self.kind, self.angle)
        return base_unitary(self.kind)


@dataclass
class DiscreteCircuit:
    """A fully discrete circuit, e.g. after extraction from a scaffold."""

    n: int
    gates: "list[DiscreteGate]" = field(default_factory=list)
    provenance: "list[int]" = field(default_factory=list)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def depth(self) -> int:
        """Scheduling depth: gates on disjoint qubits count as one layer."""
        level = [0] * self.n
        for g in self.gates:
            new = 1 + max(level[q] for q in g.qubits)
            for q in g.qubits:
                level[q] = new
        return max(level, default=0)

    def unitary(self) -> np.ndarray:
        check_dim(2**self.n, "DiscreteCircuit.unitary")
        if not self.gates:
            return np.eye(2**self.n, dtype=np.complex128)
        stack = np.stack([embed(g.local_unitary(), g.qubits, self.n) for g in self.gates])
        return kernels.ordered_product(np.ascontiguousarray(stack))

    def state(self, psi0: "np.ndarray | None" = None) -> np.ndarray:
        check_dim(2**self.n, "DiscreteCircuit.state")
        psi = np.zeros(2**self.n, dtype=np.complex128) if psi0 is None else psi0.copy()
        if psi0 is None:
            psi[0] = 1.0
        for g in self.gates:
            psi = embed(g.local_unitary(), g.qubits, self.n) @ psi
        return psi


def _ham_evo_unitary(spec: HamiltonianSpec, t: float) -> np.ndarray:
    w, v = _ham_evo_eig(spec)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


_HAM_EIG_CACHE: dict = {}


def _ham_evo_eig(spec: HamiltonianSpec):
    key = id(spec)
    hit = _HAM_EIG_CACHE.get(key)
    if hit is None:
        w, v = np.linalg.eigh(hamiltonian_matrix(spec))
        hit = (w, v)
        _HAM_EIG_CACHE[key] = hit
    return hit


class _SlotCache:
    """Embedded matrices and eigenstructure for one slot, built once."""

    __slots__ = ("unitary_fn", "generator", "log_phases", "log_vectors", "last")

    def __init__(self):
        self.unitary_fn = None
        self.generator = None  # dU/dtheta = -1j * generator @ U
        self.log_phases = None  # geodesic data for non-parameterized slots
        self.log_vectors = None
        self.last = None  # (angle, unitary) memo


class Scaffold:
    """Learnable circuit object: slots + structural logits + angles."""

    def __init__(self, n, slots, interpolation="linear", logits=None):
        check_dim(2**n, "Scaffold")
        if interpolation not in ("linear", "geodesic"):
            raise ValidationError(f"unknown interpolation {interpolation!r}")
        self.n = n
        self.slots = list(slots)
        self.interpolation = interpolation
        k = len(self.slots)
        self.logits = (
            np.zeros(k) if logits is None else np.asarray(logits, dtype=float).copy()
        )
        if self.logits.shape != (k,):
            raise ValidationError(f"logits shape {self.logits.shape} != ({k},)")
        # angles are stored per parameterized slot, in slot order
        self.param_slots = [i for i, s in enumerate(self.slots) if s.parameterized]
        self._theta_pos = {i: p for p, i in enumerate(self.param_slots)}
        self.thetas = np.array(
            [self.slots[i].angle for i in self.param_slots], dtype=float
        )
        self._caches = [self._build_cache(s) for s in self.slots]

    # -- construction helpers ------------------------------------------------

    def _build_cache(self, spec: GateSpec) -> _SlotCache:
        c = _SlotCache()
        d = 2**self.n
        kind = spec.kind
        if kind is GateKind.FROZEN:
            m = np.asarray(spec.matrix, dtype=np.complex128)
            gate = embed(m, spec.qubits, self.n)
            dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if dev > 1e-8:
                raise ValidationError(f"FROZEN slot matrix is not unitary (dev {dev:.2e})")
            c.unitary_fn = lambda angle, g=gate: g
        elif kind is GateKind.HAM_EVO:
            h_local = hamiltonian_matrix(spec.hamiltonian)
            h_full = embed(h_local, spec.qubits, self.n)
            w, v = np.linalg.eigh(h_full)
            c.generator = h_full
            c.unitary_fn = lambda angle, w=w, v=v: (v * np.exp(-1j * angle * w)) @ v.conj().T
        elif kind in (GateKind.RY, GateKind.RZ):
            from .gates import PAULI_Y, PAULI_Z

            p_full = embed(PAULI_Y if kind is GateKind.RY else PAULI_Z, spec.qubits, self.n)
            eye = np.eye(d, dtype=np.complex128)
            c.generator = p_full / 2.0
            c.unitary_fn = lambda angle, p=p_full, eye=eye: (
                np.cos(angle / 2) * eye - 1j * np.sin(angle / 2) * p
            )
        elif kind is GateKind.CPHASE:
            from .gates import embed_index_map

            amap = embed_index_map(spec.qubits, self.n)
            mask = np.zeros(d)
            mask[amap[3]] = 1.0  # |11> rows of the local block
            c.generator = np.diag(-mask).astype(np.complex128)
            c.unitary_fn = lambda angle, m=mask: np.diag(np.exp(1j * angle * m))
        else:
            gate = embed(base_unitary(kind), spec.qubits, self.n)
            c.unitary_fn = lambda angle, g=gate: g
        if self.interpolation == "geodesic" and kind not in PARAMETERIZED_KINDS:
            gate = c.unitary_fn(None)
            t, z = scipy.linalg.schur(gate, output="complex")
            phases = np.angle(np.diag(t))
            recon = (z * np.exp(1j * phases)) @ z.conj().T
            if np.max(np.abs(recon - gate)) > 1e-10:
                raise ValidationError(
                    "geodesic interpolation needs a normal (unitary) slot matrix"
                )
            c.log_phases = phases
            c.log_vectors = z
        return c

    # -- parameters ----------------------------------------------------------

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    @property
    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.slots], dtype=float)

    @property
    def frozen_mask(self) -> np.ndarray:
        return np.array([s.frozen for s in self.slots], dtype=bool)

    def switches(self) -> np.ndarray:
        """Current switch values; frozen slots report 1 (always on)."""
        s = expit(self.logits)
        s[self.frozen_mask] = 1.0
        return s

    def theta_of(self, slot_index: int) -> float:
        return float(self.thetas[self._theta_pos[slot_index]])

    def copy(self) -> "Scaffold":
        dup = _copy.copy(self)
        dup.logits = self.logits.copy()
        dup.thetas = self.thetas.copy()
        return dup

    # -- forward pass ----------------------------------------------------------

    def base_unitary_at(self, i: int) -> np.ndarray:
        """Full-register unitary of slot i at its current angle."""
        c = self._caches[i]
        angle = self.theta_of(i) if self.slots[i].parameterized else None
        if c.last is not None and c.last[0] == angle:
            return c.last[1]
        u = c.unitary_fn(angle)
        c.last = (angle, u)
        return u

    def generator_at(self, i: int) -> np.ndarray:
        """dU/dtheta = -1j * generator_at(i) @ U for parameterized slot i."""
        gen = self._caches[i].generator
        if gen is None:
            raise ValidationError(f"slot {i} ({self.slots[i].kind.value}) has no angle")
        return gen

    def effective_gate(self, i: int, s: float) -> np.ndarray:
        """Interpolated gate of slot i at switch value s."""
        spec = self.slots[i]
        if spec.frozen:
            return self.base_unitary_at(i)
        if self.interpolation == "linear":
            d = 2**self.n
            return (1.0 - s) * np.eye(d, dtype=np.complex128) + s * self.base_unitary_at(i)
        # geodesic: G^s, strictly unitary for all s
        c = self._caches[i]
        if spec.parameterized:
            return c.unitary_fn(s * self.theta_of(i))
        return (c.log_vectors * np.exp(1j * s * c.log_phases)) @ c.log_vectors.conj().T

    def effective_gate_dswitch(self, i: int, s: float) -> np.ndarray:
        """d(effective gate)/ds at switch value s."""
        spec = self.slots[i]
        if spec.frozen:
            return np.zeros((2**self.n, 2**self.n), dtype=np.complex128)
        if self.interpolation == "linear":
            return self.base_unitary_at(i) - np.eye(2**self.n, dtype=np.complex128)
        c = self._caches[i]
        if spec.parameterized:
            theta = self.theta_of(i)
            return -1j * theta * (c.generator @ c.unitary_fn(s * theta))
        return (
            c.log_vectors * (1j * c.log_phases * np.exp(1j * s * c.log_phases))
        ) @ c.log_vectors.conj().T

    def effective_gates(self, switches: "np.ndarray | None" = None) -> np.ndarray:
        """(K, d, d) stack of effective gates at the given (or current) switches."""
        s = self.switches() if switches is None else switches
        d = 2**self.n
        out = np.empty((self.slot_count, d, d), dtype=np.complex128)
        for i in range(self.slot_count):
            out[i] = self.effective_gate(i, float(s[i]))
        return out

    def forward_unitary(self, switches: "np.ndarray | None" = None) -> np.ndarray:
        """Full product, slot 0 rightmost (applied first)."""
        if self.slot_count == 0:
            return np.eye(2**self.n, dtype=np.complex128)
        return kernels.ordered_product(self.effective_gates(switches))

    def forward_state(self, switches: "np.ndarray | None" = None) -> np.ndarray:
        """Apply effective gates slot by slot to |0...0> (never forms U)."""
        psi0 = np.zeros(2**self.n, dtype=np.complex128)
        psi0[0] = 1.0
        if self.slot_count == 0:
            return psi0
        return kernels.chain_states(self.effective_gates(switches), psi0)[-1]


# ---------------------------------------------------------------------------
# Discrete extraction, motif freezing, tiling
# ---------------------------------------------------------------------------


def undecided_switches(sc: Scaffold) -> "list[tuple[int, float]]":
    lo, hi = UNDECIDED_BAND
    out = []
    for i, s in enumerate(sc.switches()):
        if not sc.slots[i].frozen and lo <= s <= hi:
            out.append((i, float(s)))
    return out


def extract_discrete(sc: Scaffold, threshold: float = 0.5) -> DiscreteCircuit:
    """Keep slots with switch >= threshold at their current angles.

    Frozen slots are always kept. Slots still inside the undecided band are
    reported via ``undecided_switches``; extraction itself just thresholds.
    """
    gates = []
    provenance = []
    s = sc.switches()
    for i, spec in enumerate(sc.slots):
        if not spec.frozen and s[i] < threshold:
            continue
        gates.append(
            DiscreteGate(
                kind=spec.kind,
                qubits=spec.qubits,
                angle=sc.theta_of(i) if spec.parameterized else None,
                hamiltonian=spec.hamiltonian,
                matrix=spec.matrix,
                source=spec.source,
                label=spec.label,
            )
        )
        provenance.append(i)
    return DiscreteCircuit(n=sc.n, gates=gates, provenance=provenance)


def freeze_motif(sc: Scaffold, threshold: float = 0.5, cost: "float | None" = None) -> GateSpec:
    """Extract a converged scaffold into a fixed, non-learnable gate.

    Refuses if any switch is still in the undecided band. The resulting
    FROZEN slot spans the motif's qubits 0..n-1; re-target by supplying new
    ``qubits`` when placing it in a larger scaffold.
    """
    if sc.n > 4:
        raise ValidationError("freeze_motif supports motifs of at most 4 qubits")
    undecided = undecided_switches(sc)
    if undecided:
        desc = ", ".join(f"slot {i}: s={s:.3f}" for i, s in undecided)
        raise ValidationError(f"scaffold has undecided switches ({desc}); refusing to freeze")
    circuit = extract_discrete(sc, threshold)
    if cost is None:
        cost = sum(sc.slots[i].cost for i in circuit.provenance)
    return GateSpec(
        kind=GateKind.FROZEN,
        qubits=tuple(range(sc.n)),
        matrix=circuit.unitary(),
        cost=float(cost),
        frozen=True,
        label="motif",
        source=circuit,
    )


def tile_motif(motif, n_total: int, stride: int) -> DiscreteCircuit:
    """Tile a motif along a linear array at qubit offsets 0, stride, 2*stride...

    ``motif`` is a DiscreteCircuit or a FROZEN GateSpec (its source circuit
    is used when present, otherwise the frozen matrix itself is placed).
    The result is a compile-only description for n_total qubits; simulation
    is refused beyond the dense limit by ``DiscreteCircuit.unitary``.
    """
    if isinstance(motif, GateSpec):
        if motif.kind is not GateKind.FROZEN:
            raise ValidationError("tile_motif expects a FROZEN gate or a DiscreteCircuit")
        if motif.source is not None:
            circuit = motif.source
        else:
            k = len(motif.qubits)
            circuit = DiscreteCircuit(
                n=k, gates=[DiscreteGate(GateKind.FROZEN, tuple(range(k)), matrix=motif.matrix)]
            )
    else:
        circuit = motif
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    n_motif = circuit.n
    if n_total < n_motif:
        raise ValidationError(f"cannot tile a {n_motif}-qubit motif onto {n_total} qubits")
    gates = []
    offset = 0
    while offset + n_motif <= n_total:
        for g in circuit.gates:
            gates.append(
                DiscreteGate(
                    kind=g.kind,
                    qubits=tuple(q + offset for q in g.qubits),
                    angle=g.angle,
                    hamiltonian=g.hamiltonian,
                    matrix=g.matrix,
                    source=g.source,
                    label=g.label,
                )
            )
        offset += stride
    return DiscreteCircuit(n=n_total, gates=gates)


def tile_placements(n_total: int, n_motif: int, stride: int) -> int:
    """Number of placements tile_motif produces (compile-time arithmetic)."""
    if n_total < n_motif:
        return 0
    return (n_total - n_motif) // stride + 1
