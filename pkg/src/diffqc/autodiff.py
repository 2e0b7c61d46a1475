"""Analytic reverse-mode gradients of the axiom losses.

Gradients with respect to structural switches and rotation angles are
assembled from cached sweep products: a suffix sweep ``S_k = G_{k-1}...G_0``
and one backward sweep folding the loss-specific adjoint in (the target
unitary for fidelity, ``H|psi>`` for energy). The cost is a constant number
of matrix products (or matrix-vector products for state losses) per slot;
``product_count()`` exposes a counter so tests can pin the linear scaling.

For linear interpolation the slot Jacobian is the constant ``G_i - I``; for
geodesic interpolation it is ``d(G^s)/ds`` from the slot's log generator.
The sigmoid chain rule ``dL/dlambda = dL/ds * s(1-s)`` is applied last so
callers (noise channels, the Gumbel baseline) can substitute their own
switch parameterization.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import ValidationError, partial_trace, require_hermitian
from .scaffold import Scaffold, switch_derivative

_PRODUCT_COUNT = 0


def product_count() -> int:
    """Matrix-matrix products performed by gradient code since the last reset."""
    return _PRODUCT_COUNT


def reset_product_count() -> None:
    global _PRODUCT_COUNT
    _PRODUCT_COUNT = 0


def _bump(k: int) -> None:
    global _PRODUCT_COUNT
    _PRODUCT_COUNT += k


def _tr_prod(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(A @ B) without forming the product."""
    return complex(np.einsum("ij,ji->", a, b))


@dataclass
class GradientVector:
    """Gradients per slot (dlogits/dswitches) and per parameterized slot (dthetas).

    ``dswitches`` is the pre-sigmoid gradient dL/ds; ``dlogits`` has the
    chain rule applied. Frozen slots carry exact zeros in all fields.
    """

    dlogits: np.ndarray
    dthetas: np.ndarray
    dswitches: np.ndarray

    def __iadd__(self, other: "GradientVector"):
        self.dlogits += other.dlogits
        self.dthetas += other.dthetas
        self.dswitches += other.dswitches
        return self

    def scaled(self, w: float) -> "GradientVector":
        return GradientVector(w * self.dlogits, w * self.dthetas, w * self.dswitches)


def _zero_grad(sc: Scaffold) -> GradientVector:
    return GradientVector(
        np.zeros(sc.slot_count), np.zeros(len(sc.param_slots)), np.zeros(sc.slot_count)
    )


def _chain_to_logits(sc: Scaffold, gv: GradientVector, switches: np.ndarray,
                     deriv: "np.ndarray | None" = None) -> None:
    d = switch_derivative(switches) if deriv is None else deriv
    gv.dlogits = gv.dswitches * d
    gv.dlogits[sc.frozen_mask] = 0.0


@dataclass
class ForwardTape:
    """Cached per-slot effective gates and surrounding products.

    Invariant: prefix[k] @ gates[k] @ suffix[k] == unitary for every k.
    """

    gates: np.ndarray
    prefix: np.ndarray
    suffix: np.ndarray
    unitary: np.ndarray


def build_tape(sc: Scaffold, switches: "np.ndarray | None" = None) -> ForwardTape:
    gates = sc.effective_gates(switches)
    k, d = sc.slot_count, 2**sc.n
    if k == 0:
        eye = np.eye(d, dtype=np.complex128)
        empty = np.empty((0, d, d), dtype=np.complex128)
        return ForwardTape(empty, empty.copy(), empty.copy(), eye)
    from . import _kernels as kernels

    prefix, suffix = kernels.prefix_suffix(gates)
    _bump(2 * (k - 1))
    unitary = gates[k - 1] @ suffix[k - 1]
    _bump(1)
    return ForwardTape(gates, prefix, suffix, unitary)


def _learnable_angle(sc: Scaffold, i: int) -> bool:
    spec = sc.slots[i]
    return spec.parameterized and spec.learn_angle and not spec.frozen


def grad_fidelity(
    sc: Scaffold,
    u_target: np.ndarray,
    switches: "np.ndarray | None" = None,
) -> "tuple[float, GradientVector]":
    """Loss 1 - |Tr(U_target^dag U)|^2 / d^2 and its gradient."""
    d = 2**sc.n
    if u_target.shape != (d, d):
        raise ValidationError(f"target shape {u_target.shape} does not match n={sc.n}")
    k = sc.slot_count
    s = sc.switches() if switches is None else switches
    gv = _zero_grad(sc)
    if k == 0:
        z = np.trace(u_target.conj().T)
        loss = 1.0 - abs(z) ** 2 / d**2
        return float(loss), gv

    gates = sc.effective_gates(s)
    suffix = np.empty_like(gates)
    suffix[0] = np.eye(d, dtype=np.complex128)
    for i in range(1, k):
        suffix[i] = gates[i - 1] @ suffix[i - 1]
    _bump(k - 1)
    # left[i] = U_target^dag @ prefix[i], built by the backward sweep
    left = np.empty_like(gates)
    left[k - 1] = u_target.conj().T
    for i in range(k - 1, 0, -1):
        left[i - 1] = left[i] @ gates[i]
    _bump(k - 1)
    unitary = gates[k - 1] @ suffix[k - 1]
    _bump(1)

    z = complex(np.vdot(u_target, unitary))  # Tr(U_target^dag U)
    loss = 1.0 - (z.real**2 + z.imag**2) / d**2
    dloss_dz_conj = -np.conj(z) / d**2  # dL/ds = 2*Re(this * dz/ds)

    linear = sc.interpolation == "linear"
    for i in range(k):
        if sc.slots[i].frozen:
            continue
        if linear:
            base = sc.base_unitary_at(i)
            m = base @ suffix[i]
            _bump(1)
            dz_ds = _tr_prod(left[i], m) - _tr_prod(left[i], suffix[i])
        else:
            dgate = sc.effective_gate_dswitch(i, float(s[i]))
            _bump(1)  # geodesic Jacobian costs one product
            m = dgate @ suffix[i]
            _bump(1)
            dz_ds = _tr_prod(left[i], m)
        gv.dswitches[i] = 2.0 * (dloss_dz_conj * dz_ds).real
        if _learnable_angle(sc, i):
            gen = sc.generator_at(i)
            if linear:
                lg = left[i] @ gen
                _bump(1)
                dz_dth = -1j * s[i] * _tr_prod(lg, m)
            else:
                gs = gates[i] @ suffix[i]
                ggs = gen @ gs
                _bump(2)
                dz_dth = -1j * s[i] * _tr_prod(left[i], ggs)
            gv.dthetas[sc._theta_pos[i]] = 2.0 * (dloss_dz_conj * dz_dth).real
    _chain_to_logits(sc, gv, s)
    return float(loss), gv


def _state_sandwich_grads(
    sc: Scaffold,
    tops: "list[np.ndarray]",
    gates: np.ndarray,
    psis: np.ndarray,
    s: np.ndarray,
) -> "list[tuple[np.ndarray, np.ndarray]]":
    """Gradients of Re<top_j | psi(params)> chains for several adjoint tops.

    Returns, per top vector, arrays (dswitches, dthetas) of
    2*Re(<w_k | d(gate_k)/dparam | psi_k>) accumulated by one backward
    sweep, where w_k is the adjoint state of that top at slot k.
    """
    k = sc.slot_count
    out = [(np.zeros(k), np.zeros(len(sc.param_slots))) for _ in tops]
    ws = [t.copy() for t in tops]
    linear = sc.interpolation == "linear"
    for i in range(k - 1, -1, -1):
        spec = sc.slots[i]
        if not spec.frozen:
            if linear:
                base_psi = sc.base_unitary_at(i) @ psis[i]
                dpsi_ds = base_psi - psis[i]
            else:
                if spec.parameterized:
                    theta = sc.theta_of(i)
                    dpsi_ds = -1j * theta * (sc.generator_at(i) @ psis[i + 1])
                else:
                    dpsi_ds = sc.effective_gate_dswitch(i, float(s[i])) @ psis[i]
                    _bump(1)
            if _learnable_angle(sc, i):
                if linear:
                    dpsi_dth = -1j * s[i] * (sc.generator_at(i) @ base_psi)
                else:
                    dpsi_dth = -1j * s[i] * (sc.generator_at(i) @ psis[i + 1])
            for j, w in enumerate(ws):
                out[j][0][i] = 2.0 * np.vdot(w, dpsi_ds).real
                if _learnable_angle(sc, i):
                    out[j][1][sc._theta_pos[i]] = 2.0 * np.vdot(w, dpsi_dth).real
        gdag = gates[i].conj().T
        for j in range(len(ws)):
            ws[j] = gdag @ ws[j]
    return out


def _forward_states(sc: Scaffold, switches: np.ndarray):
    from . import _kernels as kernels

    d = 2**sc.n
    psi0 = np.zeros(d, dtype=np.complex128)
    psi0[0] = 1.0
    gates = sc.effective_gates(switches)
    if sc.slot_count == 0:
        return gates, psi0[None, :].copy()
    return gates, kernels.chain_states(gates, psi0)


def grad_energy(
    sc: Scaffold,
    h_full: np.ndarray,
    switches: "np.ndarray | None" = None,
) -> "tuple[float, GradientVector, float]":
    """Energy <psi|H|psi> with psi = U|0>, its gradient, and Var[H].

    The state is taken as produced by the (possibly non-unitary) relaxed
    circuit, without renormalization; Var[H] = <H^2> - <H>^2 in the same
    convention, used by the shot-noise channel.
    """
    s = sc.switches() if switches is None else switches
    gates, psis = _forward_states(sc, s)
    psi = psis[-1]
    hpsi = h_full @ psi
    energy = float(np.vdot(psi, hpsi).real)
    var_h = max(float(np.vdot(hpsi, hpsi).real - energy**2), 0.0)
    gv = _zero_grad(sc)
    if sc.slot_count:
        (pair,) = _state_sandwich_grads(sc, [hpsi], gates, psis, s)
        gv.dswitches, gv.dthetas = pair
    _chain_to_logits(sc, gv, s)
    return energy, gv, var_h


def grad_simplicity(
    sc: Scaffold,
    switches: "np.ndarray | None" = None,
    mode: str = "linear",
    alpha: float = 0.1,
) -> "tuple[float, GradientVector]":
    """Cost-weighted structural penalty; frozen slots are exempt.

    Linear mode: L = sum c_i s_i with the constant gradient c_i.
    Exponential mode: L = 1 - exp(-alpha * sum c_i s_i).
    """
    s = sc.switches() if switches is None else switches
    c = sc.costs.copy()
    c[sc.frozen_mask] = 0.0
    gv = _zero_grad(sc)
    total = float(np.dot(c, s))
    if mode == "linear":
        loss = total
        gv.dswitches = c.copy()
    elif mode == "exponential":
        t = np.exp(-alpha * total)
        loss = 1.0 - t
        gv.dswitches = alpha * t * c
    else:
        raise ValidationError(f"unknown simplicity mode {mode!r}")
    _chain_to_logits(sc, gv, s)
    return loss, gv


_ENTROPY_DERIV_CLIP = 1e-12
_ENT_DEGENERACY_GAP = 1e-8


def grad_entanglement(
    sc: Scaffold,
    partition: "tuple[int, ...]",
    scale: float = 1.0,
    switches: "np.ndarray | None" = None,
) -> "tuple[float, GradientVector]":
    """Loss exp(-scale * S(rho_A)) on the normalized output state.

    The gradient is analytic through the entropy's spectral derivative when
    the reduced spectrum is safely non-degenerate; otherwise it falls back
    to central finite differences for this term only.
    """
    from .gates import embed

    s = sc.switches() if switches is None else switches
    gates, psis = _forward_states(sc, s)
    psi = psis[-1]
    norm2 = float(np.vdot(psi, psi).real)
    psin = psi / np.sqrt(norm2)
    rho = partial_trace(np.outer(psin, psin.conj()), partition, sc.n)
    mu, vecs = np.linalg.eigh(rho)
    kept = mu > _ENTROPY_DERIV_CLIP
    entropy = float(-np.sum(mu[kept] * np.log2(mu[kept])))
    loss = float(np.exp(-scale * entropy))
    gv = _zero_grad(sc)
    if sc.slot_count == 0:
        return loss, gv

    gaps = np.diff(np.sort(mu))
    degenerate = bool(np.any(gaps < _ENT_DEGENERACY_GAP)) or bool(
        np.any(mu[kept] < 1e-6)
    )
    if degenerate:
        _entanglement_fd(sc, partition, scale, s, gv)
        _chain_to_logits(sc, gv, s)
        return loss, gv

    # dS/dmu_i = -(log2 mu_i + 1/ln 2); assemble O with dS absorbed so that
    # dS/dp = 2*Re(<psin| O_full |dpsin>)
    f = np.where(kept, -(np.log2(np.where(kept, mu, 1.0)) + 1.0 / np.log(2.0)), 0.0)
    o_local = (vecs * f) @ vecs.conj().T
    o_full = embed(o_local, tuple(sorted(partition)), sc.n)
    opsi = o_full @ psi
    o_exp = float(np.vdot(psin, o_full @ psin).real)
    (pair_o, pair_i) = _state_sandwich_grads(sc, [opsi, psi], gates, psis, s)
    # normalization correction: d<O> = [2Re<Opsi|dpsi> - <O> 2Re<psi|dpsi>]/norm2
    ds_dswitch = (pair_o[0] - o_exp * pair_i[0]) / norm2
    ds_dtheta = (pair_o[1] - o_exp * pair_i[1]) / norm2
    gv.dswitches = -scale * loss * ds_dswitch
    gv.dthetas = -scale * loss * ds_dtheta
    _chain_to_logits(sc, gv, s)
    return loss, gv


def _entanglement_loss_only(sc, partition, scale, switches):
    psi = sc.forward_state(switches)
    norm2 = float(np.vdot(psi, psi).real)
    psin = psi / np.sqrt(norm2)
    rho = partial_trace(np.outer(psin, psin.conj()), partition, sc.n)
    mu = np.linalg.eigvalsh(rho)
    kept = mu > _ENTROPY_DERIV_CLIP
    entropy = float(-np.sum(mu[kept] * np.log2(mu[kept])))
    return float(np.exp(-scale * entropy))


def _entanglement_fd(sc, partition, scale, s, gv, eps=1e-6):
    # degenerate reduced spectrum: eigenvector derivatives are ill-defined,
    # fall back to central differences in switch/angle space for this term
    for i in range(sc.slot_count):
        if sc.slots[i].frozen:
            continue
        sp = s.copy()
        sp[i] = s[i] + eps
        sm = s.copy()
        sm[i] = s[i] - eps
        gv.dswitches[i] = (
            _entanglement_loss_only(sc, partition, scale, sp)
            - _entanglement_loss_only(sc, partition, scale, sm)
        ) / (2 * eps)
        if _learnable_angle(sc, i):
            pos = sc._theta_pos[i]
            orig = sc.thetas[pos]
            sc.thetas[pos] = orig + eps
            hi = _entanglement_loss_only(sc, partition, scale, s)
            sc.thetas[pos] = orig - eps
            lo = _entanglement_loss_only(sc, partition, scale, s)
            sc.thetas[pos] = orig
            gv.dthetas[pos] = (hi - lo) / (2 * eps)


def grad_robustness(
    sc: Scaffold,
    h_full: np.ndarray,
    channels: "list[np.ndarray]",
    switches: "np.ndarray | None" = None,
) -> "tuple[float, GradientVector]":
    """Average energy under single-operator error channels.

    L = (1/|N|) sum_j <psi| N_j^dag H N_j |psi>; since the sandwich is
    linear in the channel average, this reduces to the energy gradient of
    the effective operator mean_j N_j^dag H N_j.
    """
    h_rob = robustness_operator(h_full, channels)
    loss, gv, _ = grad_energy(sc, h_rob, switches)
    return loss, gv


def robustness_operator(h_full: np.ndarray, channels: "list[np.ndarray]") -> np.ndarray:
    if not channels:
        raise ValidationError("robustness needs at least one channel operator")
    require_hermitian(h_full, context="robustness_operator")
    acc = np.zeros_like(h_full)
    for nj in channels:
        acc += nj.conj().T @ h_full @ nj
    return acc / len(channels)


# ---------------------------------------------------------------------------
# Total loss
# ---------------------------------------------------------------------------


@dataclass
class TotalLoss:
    total: float
    terms: "dict[str, float]"
    grad: GradientVector
    fidelity: float = 0.0
    energy: float = 0.0
    var_h: float = 0.0


def grad_total(sc: Scaffold, axioms, switches: "np.ndarray | None" = None) -> TotalLoss:
    """Weighted sum of the active axiom losses and its gradient.

    ``axioms`` is an ``AxiomSet`` whose matrices have been resolved
    (see axioms.py); curricula override its effective fields per epoch.
    """
    s = sc.switches() if switches is None else switches
    gv = _zero_grad(sc)
    terms = {"fid": 0.0, "energy": 0.0, "simp": 0.0, "ent": 0.0, "rob": 0.0}
    fidelity = 0.0
    energy = 0.0
    var_h = 0.0
    if axioms.w_fid > 0.0:
        loss, g = grad_fidelity(sc, axioms.target_unitary, s)
        terms["fid"] = loss
        fidelity = 1.0 - loss
        gv += g.scaled(axioms.w_fid)
    if axioms.w_energy > 0.0:
        loss, g, var_h = grad_energy(sc, axioms.h_matrix, s)
        terms["energy"] = loss
        energy = loss
        gv += g.scaled(axioms.w_energy)
    w_simp = axioms.w_simp
    if w_simp > 0.0:
        loss, g = grad_simplicity(sc, s, axioms.simplicity_mode, axioms.alpha)
        terms["simp"] = loss
        gv += g.scaled(w_simp)
    if axioms.w_ent > 0.0:
        loss, g = grad_entanglement(sc, axioms.ent_partition, axioms.ent_scale, s)
        terms["ent"] = loss
        gv += g.scaled(axioms.w_ent)
    if axioms.w_rob > 0.0:
        loss, g, _ = grad_energy(sc, axioms.rob_matrix, s)
        terms["rob"] = loss
        gv += g.scaled(axioms.w_rob)
    total = (
        axioms.w_fid * terms["fid"]
        + axioms.w_energy * terms["energy"]
        + w_simp * terms["simp"]
        + axioms.w_ent * terms["ent"]
        + axioms.w_rob * terms["rob"]
    )
    return TotalLoss(float(total), terms, gv, fidelity, energy, var_h)


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------


def finite_difference_check(sc: Scaffold, loss_fn, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn(scaffold) -> (loss, GradientVector)`` must be deterministic
    (noise channels disabled). Errors are measured relative to the overall
    gradient scale, max(||g||_inf, 1e-8), so exactly-zero components (frozen
    slots, saturated switches) do not produce 0/0 blowups.
    """
    _, gv = loss_fn(sc)
    fd_logits = np.zeros_like(gv.dlogits)
    for i in range(sc.slot_count):
        orig = sc.logits[i]
        sc.logits[i] = orig + eps
        hi = loss_fn(sc)[0]
        sc.logits[i] = orig - eps
        lo = loss_fn(sc)[0]
        sc.logits[i] = orig
        fd_logits[i] = (hi - lo) / (2 * eps)
    fd_thetas = np.zeros_like(gv.dthetas)
    for p in range(len(sc.thetas)):
        orig = sc.thetas[p]
        sc.thetas[p] = orig + eps
        hi = loss_fn(sc)[0]
        sc.thetas[p] = orig - eps
        lo = loss_fn(sc)[0]
        sc.thetas[p] = orig
        fd_thetas[p] = (hi - lo) / (2 * eps)
    analytic = np.concatenate([gv.dlogits, gv.dthetas])
    numeric = np.concatenate([fd_logits, fd_thetas])
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0), 1e-8)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)
