"""AdamW, logit initialization, curricula, the Gumbel baseline, and the
training loop.

All stochasticity (noise channels, Gumbel draws) flows from one seeded
generator owned by the trial, so identical scenario + seed reproduces the
trace bit for bit. Structural selection is sigmoid switches by default; the
``gumbel`` selector swaps in the 2-way Gumbel-Softmax reparameterization
used as the comparison baseline.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .autodiff import grad_total
from .axioms import AxiomSet, NoiseChannelSpec
from .linalg import ValidationError
from .scaffold import Scaffold, switch_derivative


class TrainingDiverged(RuntimeError):
    """Raised when a NaN loss or gradient is encountered; carries the epoch."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


# ---------------------------------------------------------------------------
# AdamW
# ---------------------------------------------------------------------------


@dataclass
class AdamWState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    m: "np.ndarray | None" = None
    v: "np.ndarray | None" = None
    step: int = 0


def adamw_step(state: AdamWState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One decoupled-weight-decay Adam update; returns the new parameters."""
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradient passed to adamw_step")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.step += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    mhat = state.m / (1 - state.beta1**state.step)
    vhat = state.v / (1 - state.beta2**state.step)
    out = params - state.lr * mhat / (np.sqrt(vhat) + state.eps)
    if state.weight_decay:
        out = out - state.lr * state.weight_decay * params
    return out


# ---------------------------------------------------------------------------
# Initialization and curricula
# ---------------------------------------------------------------------------


def init_logits(sc: Scaffold, policy: str = "biased_off", logit: "float | None" = None) -> Scaffold:
    """Set all non-frozen structural logits.

    ``biased_off`` (default -2.0, s ~ 0.12) grows circuits from the
    identity and avoids barren-plateau initialization; ``all_on`` (default
    +2.0, s ~ 0.88) sets up pruning tasks.
    """
    if policy == "biased_off":
        value = -2.0 if logit is None else logit
    elif policy == "all_on":
        value = 2.0 if logit is None else logit
    else:
        raise ValidationError(f"unknown init policy {policy!r}")
    for i in range(sc.slot_count):
        if not sc.slots[i].frozen:
            sc.logits[i] = value
    return sc


@dataclass
class CurriculumSpec:
    """Training schedule: Hamiltonian annealing and/or simplicity ramping.

    kinds:
      none        -- static axiom weights throughout.
      annealing   -- H(t) = (1-t) H_easy + t H_hard with t ramped linearly
                     over ``anneal_epochs``; w_simp stays 0 until
                     ``simp_start`` (default: end of annealing) then ramps
                     to ``w_simp_final`` over ``simp_ramp`` epochs.
      two_phase   -- w_simp = 0 before ``switch_epoch``, w_simp_final after.
      soft_prune  -- w_simp = 0 for ``warmup_epochs``, then a linear ramp to
                     w_simp_final over ``ramp_epochs``.
    """

    kind: str = "none"
    h_easy: "np.ndarray | None" = None
    h_hard: "np.ndarray | None" = None
    anneal_epochs: int = 0
    switch_epoch: int = 0
    warmup_epochs: int = 0
    ramp_epochs: int = 0
    w_simp_final: float = 0.0
    simp_start: "int | None" = None
    simp_ramp: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "annealing", "two_phase", "soft_prune"):
            raise ValidationError(f"unknown curriculum kind {self.kind!r}")
        if self.kind == "annealing" and (self.h_easy is None or self.h_hard is None):
            raise ValidationError("annealing curriculum needs h_easy and h_hard")


def curriculum_weights(
    spec: CurriculumSpec, epoch: int, base_w_simp: float
) -> "tuple[float, np.ndarray | None, float]":
    """(t, effective Hamiltonian or None, effective w_simp) at an epoch."""
    if spec.kind == "none":
        return 0.0, None, base_w_simp
    if spec.kind == "annealing":
        t = 1.0 if spec.anneal_epochs <= 0 else min(1.0, epoch / spec.anneal_epochs)
        h_eff = (1.0 - t) * spec.h_easy + t * spec.h_hard
        start = spec.anneal_epochs if spec.simp_start is None else spec.simp_start
        if epoch < start:
            w = 0.0
        elif spec.simp_ramp <= 0:
            w = spec.w_simp_final
        else:
            w = spec.w_simp_final * min(1.0, (epoch - start) / spec.simp_ramp)
        return t, h_eff, w
    if spec.kind == "two_phase":
        in_phase2 = epoch >= spec.switch_epoch
        return (1.0 if in_phase2 else 0.0), None, (spec.w_simp_final if in_phase2 else 0.0)
    # soft_prune
    if epoch < spec.warmup_epochs:
        return 0.0, None, 0.0
    if spec.ramp_epochs <= 0:
        return 1.0, None, spec.w_simp_final
    t = min(1.0, (epoch - spec.warmup_epochs) / spec.ramp_epochs)
    return t, None, spec.w_simp_final * t


# ---------------------------------------------------------------------------
# Gumbel-Softmax baseline selector
# ---------------------------------------------------------------------------


def gumbel_select(
    alpha: np.ndarray, tau: float, rng: np.random.Generator
) -> "tuple[np.ndarray, np.ndarray]":
    """2-way Gumbel-Softmax weights per slot (include vs identity).

    w_i = softmax((alpha_i + g1_i)/tau, (0 + g2_i)/tau) for the "include"
    branch, which reduces to sigmoid((alpha_i + g1_i - g2_i)/tau). Returns
    (weights, dweights/dalpha); the derivative w(1-w)/tau is what makes the
    baseline's decisions sharp (and noise-sensitive) at low temperature.
    """
    if tau <= 0:
        raise ValidationError("Gumbel temperature must be > 0")
    g1 = rng.gumbel(size=alpha.shape)
    g2 = rng.gumbel(size=alpha.shape)
    w = expit((alpha + g1 - g2) / tau)
    return w, w * (1.0 - w) / tau


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class OptimizerConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0  # applied to structural logits only: it bounds
    # them inside the responsive sigmoid band without biasing rotation angles
    selector: str = "sigmoid"  # sigmoid | gumbel
    tau: float = 1.0
    tau_final: "float | None" = None  # exponential decay target, None = constant
    hard_gumbel: bool = False
    lr_final: "float | None" = None  # exponential cool-down target, None = constant

    def tau_at(self, epoch: int, epochs: int) -> float:
        return _exp_schedule(self.tau, self.tau_final, epoch, epochs)

    def lr_at(self, epoch: int, epochs: int) -> float:
        return _exp_schedule(self.lr, self.lr_final, epoch, epochs)


def _exp_schedule(start: float, final: "float | None", epoch: int, epochs: int) -> float:
    if final is None or epochs <= 1:
        return start
    frac = epoch / (epochs - 1)
    return float(start * (final / start) ** frac)


@dataclass
class EpochRecord:
    epoch: int
    total_loss: float
    terms: "dict[str, float]"
    fidelity: float
    energy: float
    t_curriculum: float
    switches: np.ndarray
    thetas: np.ndarray


@dataclass
class TrainingTrace:
    name: str
    records: "list[EpochRecord]" = field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0
    error: "str | None" = None
    final_switches: "np.ndarray | None" = None
    final_thetas: "np.ndarray | None" = None

    CSV_FIXED = [
        "epoch",
        "total_loss",
        "loss_fid",
        "loss_energy",
        "loss_simp",
        "loss_ent",
        "loss_rob",
        "fidelity",
        "energy",
        "t_curriculum",
    ]

    def header(self) -> "list[str]":
        if self.records:
            k = len(self.records[0].switches)
            p = len(self.records[0].thetas)
        else:
            k = p = 0
        return (
            list(self.CSV_FIXED)
            + [f"s_{i}" for i in range(k)]
            + [f"theta_{i}" for i in range(p)]
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for r in self.records:
                row = [
                    r.epoch,
                    f"{r.total_loss:.12g}",
                    f"{r.terms['fid']:.12g}",
                    f"{r.terms['energy']:.12g}",
                    f"{r.terms['simp']:.12g}",
                    f"{r.terms['ent']:.12g}",
                    f"{r.terms['rob']:.12g}",
                    f"{r.fidelity:.12g}",
                    f"{r.energy:.12g}",
                    f"{r.t_curriculum:.12g}",
                ]
                row += [f"{s:.12g}" for s in r.switches]
                row += [f"{t:.12g}" for t in r.thetas]
                writer.writerow(row)


def train(
    sc: Scaffold,
    axioms: AxiomSet,
    epochs: int,
    seed: int = 0,
    optimizer: "OptimizerConfig | None" = None,
    curriculum: "CurriculumSpec | None" = None,
    noise: "NoiseChannelSpec | None" = None,
    record_every: int = 1,
    name: str = "run",
) -> TrainingTrace:
    """Optimize a scaffold's logits and angles against an axiom set.

    The scaffold is mutated in place (single-owner contract); the returned
    trace holds per-epoch records and the final parameters. A NaN loss or
    gradient terminates training with the partial trace and an error record
    rather than clamping.
    """
    opt = optimizer or OptimizerConfig()
    cur = curriculum or CurriculumSpec()
    noise = noise or NoiseChannelSpec()
    rng = np.random.default_rng(seed)
    adam = AdamWState(lr=opt.lr, beta1=opt.beta1, beta2=opt.beta2, eps=opt.eps)
    trace = TrainingTrace(name=name, seed=seed)
    start = time.perf_counter()

    frozen = sc.frozen_mask
    learn_theta = np.array(
        [sc.slots[i].learn_angle and not sc.slots[i].frozen for i in sc.param_slots],
        dtype=bool,
    )
    gumbel = opt.selector == "gumbel"
    if opt.selector not in ("sigmoid", "gumbel"):
        raise ValidationError(f"unknown selector {opt.selector!r}")

    for epoch in range(epochs):
        t_cur, h_eff, w_simp = curriculum_weights(cur, epoch, axioms.w_simp)
        ax = axioms.with_effective(h_matrix=h_eff, w_simp=w_simp)

        if gumbel:
            tau = opt.tau_at(epoch, epochs)
            w, dw = gumbel_select(sc.logits, tau, rng)
            if opt.hard_gumbel:
                switches = np.where(w > 0.5, 1.0, 0.0)  # straight-through value
            else:
                switches = w
            switches = switches.copy()
            switches[frozen] = 1.0
            chain = dw
        else:
            switches = sc.switches()
            chain = switch_derivative(switches)

        result = grad_total(sc, ax, switches)
        if not np.isfinite(result.total):
            trace.error = f"non-finite loss at epoch {epoch}"
            break

        sd = noise.stddev(result.var_h)
        loss_seen = result.total
        dswitches = result.grad.dswitches
        dthetas = result.grad.dthetas
        if sd > 0.0:
            loss_seen = loss_seen + rng.normal(0.0, sd)
            dswitches = dswitches + rng.normal(0.0, sd, size=dswitches.shape)
            dthetas = dthetas + rng.normal(0.0, sd, size=dthetas.shape)
        dlogits = dswitches * chain
        dlogits[frozen] = 0.0
        dthetas = np.where(learn_theta, dthetas, 0.0)

        if not (np.all(np.isfinite(dlogits)) and np.all(np.isfinite(dthetas))):
            trace.error = f"non-finite gradient at epoch {epoch}"
            break

        if epoch % record_every == 0 or epoch == epochs - 1:
            trace.records.append(
                EpochRecord(
                    epoch=epoch,
                    total_loss=float(loss_seen),
                    terms=dict(result.terms),
                    fidelity=result.fidelity,
                    energy=result.energy,
                    t_curriculum=float(t_cur),
                    switches=switches.copy(),
                    thetas=sc.thetas.copy(),
                )
            )

        adam.lr = opt.lr_at(epoch, epochs)
        params = np.concatenate([sc.logits, sc.thetas])
        grads = np.concatenate([dlogits, dthetas])
        params = adamw_step(adam, params, grads)
        k = sc.slot_count
        new_logits = params[:k]
        if opt.weight_decay:
            new_logits = new_logits - adam.lr * opt.weight_decay * sc.logits
        new_thetas = params[k:]
        sc.logits[~frozen] = new_logits[~frozen]
        sc.thetas[learn_theta] = new_thetas[learn_theta]

    trace.wall_time = time.perf_counter() - start
    trace.final_switches = sc.switches()
    trace.final_thetas = sc.thetas.copy()
    return trace
