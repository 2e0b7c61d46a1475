"""Pure NumPy implementations of the chain-product kernels.

These are the reference semantics for the compiled module in ``_fast.pyx``;
both expose the same four functions and are interchangeable. Gate stacks are
``(K, d, d)`` complex128 arrays ordered so that slot 0 acts on the state
first (i.e. it is the rightmost factor of the matrix product).
"""

import numpy as np


def ordered_product(gates: np.ndarray) -> np.ndarray:
    """Product G_{K-1} @ ... @ G_1 @ G_0 of a (K, d, d) stack."""
    k, d, _ = gates.shape
    out = np.eye(d, dtype=np.complex128)
    for i in range(k):
        out = gates[i] @ out
    return out


def prefix_suffix(gates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative products around every slot.

    Returns ``(prefix, suffix)`` with ``prefix[k] = G_{K-1} @ ... @ G_{k+1}``
    and ``suffix[k] = G_{k-1} @ ... @ G_0`` so that for every k
    ``prefix[k] @ gates[k] @ suffix[k]`` equals the full product.
    """
    k, d, _ = gates.shape
    prefix = np.empty_like(gates)
    suffix = np.empty_like(gates)
    eye = np.eye(d, dtype=np.complex128)
    suffix[0] = eye
    for i in range(1, k):
        suffix[i] = gates[i - 1] @ suffix[i - 1]
    prefix[k - 1] = eye
    for i in range(k - 2, -1, -1):
        prefix[i] = prefix[i + 1] @ gates[i + 1]
    return prefix, suffix


def chain_states(gates: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    """All intermediate states: out[k+1] = G_k @ out[k], out[0] = psi0."""
    k, d, _ = gates.shape
    out = np.empty((k + 1, d), dtype=np.complex128)
    out[0] = psi0
    for i in range(k):
        out[i + 1] = gates[i] @ out[i]
    return out


def adjoint_states(gates: np.ndarray, top: np.ndarray) -> np.ndarray:
    """Backward adjoint sweep: out[K] = top, out[k] = G_k^dagger @ out[k+1]."""
    k, d, _ = gates.shape
    out = np.empty((k + 1, d), dtype=np.complex128)
    out[k] = top
    for i in range(k - 1, -1, -1):
        out[i] = gates[i].conj().T @ out[i + 1]
    return out
