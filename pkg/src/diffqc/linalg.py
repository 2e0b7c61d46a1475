"""Dense complex linear algebra for small multi-qubit systems.

Everything here operates on plain ``numpy`` arrays: unitaries and Hermitian
operators are ``(d, d)`` complex matrices, states are ``(d,)`` complex
vectors, with ``d = 2**n``. Dense storage is capped at ``MAX_DIM = 4096``
(12 qubits); larger systems are handled only as compile-time circuit
descriptions elsewhere.

Bit order convention (used by every module in this package): qubit 0 is the
most significant bit of the basis index, i.e. the leftmost tensor factor.
``kron(X, I)`` therefore flips qubit 0 of a 2-qubit register:
``kron(X, I) @ |00> = |10>``.
"""

import numpy as np

MAX_DIM = 4096  # 12 qubits; dense simulation above this is refused
ENTROPY_EIGENVALUE_CLIP = 1e-12


class SizeLimitError(ValueError):
    """Requested operator dimension exceeds the dense-simulation cap."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


def check_dim(dim: int, context: str = "") -> None:
    if dim > MAX_DIM:
        where = f" in {context}" if context else ""
        raise SizeLimitError(
            f"dimension {dim} exceeds the dense limit {MAX_DIM} (12 qubits){where}"
        )


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the size cap enforced.

    The left factor acts on the more significant qubits (see module
    docstring for the bit order).
    """
    check_dim(a.shape[0] * b.shape[0], "kron")
    return np.kron(a, b)


def basis_state(n: int, index: int = 0) -> np.ndarray:
    """Computational basis state |index> of an n-qubit register."""
    d = 2**n
    check_dim(d, "basis_state")
    psi = np.zeros(d, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    d = m.shape[0]
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(d))) < tol)


def require_hermitian(h: np.ndarray, tol: float = 1e-10, context: str = "") -> None:
    dev = np.max(np.abs(h - h.conj().T))
    if dev >= tol:
        where = f" in {context}" if context else ""
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3e}){where}")


def matexp_hermitian(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(-1j * scale * H) for Hermitian H, via eigendecomposition.

    Exact up to the eigensolver: the result is unitary to ~1e-10 even for
    large ``scale``, which scaling-and-squaring does not guarantee.
    """
    require_hermitian(h, context="matexp_hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def density_matrix(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| normalized to unit trace."""
    rho = np.outer(psi, psi.conj())
    return rho / np.trace(rho).real


def partial_trace(rho: np.ndarray, keep: "list[int] | tuple[int, ...]", n: int) -> np.ndarray:
    """Trace out all qubits not in ``keep`` from an n-qubit density matrix."""
    keep = sorted(set(keep))
    if not keep:
        raise ValidationError("partial_trace: keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValidationError(f"partial_trace: qubit indices {keep} out of range for n={n}")
    if rho.shape != (2**n, 2**n):
        raise ValidationError(
            f"partial_trace: shape {rho.shape} does not match n={n}"
        )
    traced = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    m = n
    remaining = list(range(n))
    for q in sorted(traced, reverse=True):
        i = remaining.index(q)
        t = np.trace(t, axis1=i, axis2=i + m)
        remaining.pop(i)
        m -= 1
    d_keep = 2 ** len(keep)
    return t.reshape(d_keep, d_keep)


def vn_entropy(rho: np.ndarray, eigenvalue_clip: float = ENTROPY_EIGENVALUE_CLIP) -> float:
    """Von Neumann entropy -Tr(rho log2 rho) in bits.

    Eigenvalues at or below ``eigenvalue_clip`` contribute zero, which is
    the correct x*log(x) -> 0 limit and keeps degenerate spectra finite.
    """
    w = np.linalg.eigvalsh(rho)
    w = w[w > eigenvalue_clip]
    return float(-np.sum(w * np.log2(w)))


def exact_ground_energy(h: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum eigenvalue and eigenvector of a Hermitian operator.

    This is the oracle the variational experiments are judged against.
    """
    check_dim(h.shape[0], "exact_ground_energy")
    require_hermitian(h, context="exact_ground_energy")
    w, v = np.linalg.eigh(h)
    return float(w[0]), v[:, 0].astype(np.complex128)
