"""Differentiable axiom predicates/losses and the evaluation-noise channels.

An ``AxiomSet`` bundles the weighted loss terms one scenario optimizes:
correctness (fidelity against a target unitary, or energy of a
Hamiltonian), simplicity (cost-weighted switch penalty), entanglement
(entropy of a bipartition) and robustness (average energy under error
channels). Weights of zero disable a term. ``resolve()`` turns symbolic
payloads into dense matrices once, before training.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .gates import HamiltonianSpec, hamiltonian_matrix
from .linalg import ValidationError, partial_trace, vn_entropy


@dataclass
class NoiseChannelSpec:
    """Stochastic perturbation of loss evaluations during training.

    ``gaussian_eval`` adds N(0, sigma^2) draws; ``shot`` adds draws with
    variance Var[H]/n_shots, the central-limit behavior of estimating the
    energy from a finite number of measurement shots. Draws are applied to
    the loss value and, independently, to each pre-sigmoid gradient
    component, so saturated switches damp noise through the chain rule
    (the "locking-in" effect).
    """

    mode: str = "none"  # none | gaussian_eval | shot
    sigma: float = 0.0
    n_shots: int = 1

    def __post_init__(self):
        if self.mode not in ("none", "gaussian_eval", "shot"):
            raise ValidationError(f"unknown noise mode {self.mode!r}")
        if self.sigma < 0:
            raise ValidationError("sigma must be >= 0")
        if self.n_shots < 1:
            raise ValidationError("n_shots must be >= 1")

    def stddev(self, var_h: float = 0.0) -> float:
        if self.mode == "gaussian_eval":
            return self.sigma
        if self.mode == "shot":
            return float(np.sqrt(max(var_h, 0.0) / self.n_shots))
        return 0.0


def apply_eval_noise(value: float, spec: NoiseChannelSpec, rng: np.random.Generator,
                     var_h: float = 0.0) -> float:
    """Perturb a scalar evaluation according to the noise channel."""
    sd = spec.stddev(var_h)
    if sd == 0.0:
        return float(value)
    return float(value + rng.normal(0.0, sd))


@dataclass
class AxiomSet:
    """Weighted axiom losses for one scenario.

    Either ``target_unitary`` (with w_fid > 0) or a Hamiltonian (with
    w_energy > 0) must be active: a scenario always has a correctness term.
    ``hamiltonian`` may be a HamiltonianSpec or a dense Hermitian matrix;
    ``h_matrix`` is its resolved dense form.
    """

    target_unitary: "np.ndarray | None" = None
    hamiltonian: "HamiltonianSpec | np.ndarray | None" = None
    w_fid: float = 0.0
    w_energy: float = 0.0
    w_simp: float = 0.0
    w_ent: float = 0.0
    w_rob: float = 0.0
    simplicity_mode: str = "linear"  # linear | exponential
    alpha: float = 0.1
    ent_partition: "tuple[int, ...] | None" = None
    ent_scale: float = 1.0
    robustness_channels: "list[np.ndarray] | None" = None
    h_matrix: "np.ndarray | None" = None
    rob_matrix: "np.ndarray | None" = None

    def resolve(self, n: int) -> "AxiomSet":
        """Validate and materialize dense operators for an n-qubit system."""
        for name, w in (
            ("w_fid", self.w_fid),
            ("w_energy", self.w_energy),
            ("w_simp", self.w_simp),
            ("w_ent", self.w_ent),
            ("w_rob", self.w_rob),
        ):
            if not np.isfinite(w) or w < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {w}")
        if self.w_fid <= 0.0 and self.w_energy <= 0.0:
            raise ValidationError("at least one correctness term (fidelity or energy) required")
        if self.simplicity_mode not in ("linear", "exponential"):
            raise ValidationError(f"unknown simplicity mode {self.simplicity_mode!r}")
        d = 2**n
        h_matrix = self.h_matrix
        if self.w_fid > 0.0:
            if self.target_unitary is None or self.target_unitary.shape != (d, d):
                raise ValidationError("fidelity axiom needs a target unitary of matching size")
        if self.w_energy > 0.0 or self.w_rob > 0.0:
            if isinstance(self.hamiltonian, HamiltonianSpec):
                h_matrix = hamiltonian_matrix(self.hamiltonian)
            elif self.hamiltonian is not None:
                h_matrix = np.asarray(self.hamiltonian, dtype=np.complex128)
            if h_matrix is None or h_matrix.shape != (d, d):
                raise ValidationError("energy axiom needs a Hamiltonian of matching size")
        rob_matrix = None
        if self.w_rob > 0.0:
            from .autodiff import robustness_operator

            if not self.robustness_channels:
                raise ValidationError("robustness axiom needs a non-empty channel set")
            rob_matrix = robustness_operator(h_matrix, list(self.robustness_channels))
        if self.w_ent > 0.0:
            if not self.ent_partition:
                raise ValidationError("entanglement axiom needs a bipartition")
            if any(q < 0 or q >= n for q in self.ent_partition):
                raise ValidationError(f"entanglement partition {self.ent_partition} out of range")
        return replace(self, h_matrix=h_matrix, rob_matrix=rob_matrix)

    def with_effective(self, h_matrix: "np.ndarray | None" = None,
                       w_simp: "float | None" = None) -> "AxiomSet":
        """Cheap per-epoch view with curriculum overrides applied."""
        return replace(
            self,
            h_matrix=self.h_matrix if h_matrix is None else h_matrix,
            w_simp=self.w_simp if w_simp is None else w_simp,
        )


# ---------------------------------------------------------------------------
# Pure predicate / loss functions
# ---------------------------------------------------------------------------


def fidelity_predicate(u: np.ndarray, u_target: np.ndarray) -> float:
    """Normalized squared trace overlap |Tr(U_target^dag U)|^2 / d^2 in [0, 1]."""
    if u.shape != u_target.shape:
        raise ValidationError(f"dimension mismatch {u.shape} vs {u_target.shape}")
    d = u.shape[0]
    z = np.vdot(u_target, u)
    return float((z.real**2 + z.imag**2) / d**2)


def fidelity_loss(u: np.ndarray, u_target: np.ndarray) -> float:
    return 1.0 - fidelity_predicate(u, u_target)


def simplicity_terms(
    switches: np.ndarray,
    costs: np.ndarray,
    mode: str = "linear",
    alpha: float = 0.1,
) -> "tuple[float, float]":
    """(predicate, loss) of the cost-weighted simplicity axiom."""
    total = float(np.dot(costs, switches))
    predicate = float(np.exp(-alpha * total))
    if mode == "linear":
        return predicate, total
    if mode == "exponential":
        return predicate, 1.0 - predicate
    raise ValidationError(f"unknown simplicity mode {mode!r}")


def entanglement_loss(
    state_or_rho: np.ndarray,
    partition: "tuple[int, ...]",
    scale: float,
    n: int,
) -> float:
    """exp(-scale * S(rho_A)): ~1 for separable states, ->0 for maximal entanglement."""
    if state_or_rho.ndim == 1:
        psi = state_or_rho / np.linalg.norm(state_or_rho)
        rho = np.outer(psi, psi.conj())
    else:
        rho = state_or_rho
    entropy = vn_entropy(partial_trace(rho, partition, n))
    return float(np.exp(-scale * entropy))


def robustness_loss(psi: np.ndarray, h_full: np.ndarray, channels: "list[np.ndarray]") -> float:
    """Average energy under single-operator error channels."""
    if not channels:
        raise ValidationError("robustness needs at least one channel operator")
    acc = 0.0
    for nj in channels:
        v = nj @ psi
        acc += float(np.vdot(v, h_full @ v).real)
    return acc / len(channels)
