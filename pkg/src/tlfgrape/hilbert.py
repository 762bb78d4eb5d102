"""Finite-dimensional operator and superoperator primitives.

Conventions used throughout the package:

* The composite Hilbert space is qubit (x) fluctuator, in that order, so a
  product operator is ``kron(A_qubit, B_tlf)`` and the basis ordering is
  ``|q0 t0>, |q0 t1>, |q1 t0>, |q1 t1>``.
* Density matrices are vectorized by column stacking: ``vec(rho)[i + n*j] =
  rho[i, j]``, which gives the identity ``vec(A @ rho @ B) =
  kron(B.T, A) @ vec(rho)``.  Every superoperator in the package is written
  in this one convention.
* Operators and superoperators are plain complex ``numpy`` arrays; shape is
  the only typing.  Stacked arguments ``(..., n, n)`` are accepted where
  noted.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

DIM_QUBIT = 2
DIM_TLF = 2
DIM = DIM_QUBIT * DIM_TLF

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

#: TLF raising operator, maps the lower eigenstate of tau_z (second basis
#: state, eigenvalue -1) to the upper one.
TAU_PLUS_2 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
TAU_MINUS_2 = TAU_PLUS_2.conj().T

_EYE2 = np.eye(2, dtype=complex)


def pauli(axis: str, subsystem: str) -> np.ndarray:
    """Pauli operator embedded in the 4-dimensional qubit-TLF space.

    ``axis`` is one of ``"x", "y", "z", "i"`` and ``subsystem`` one of
    ``"qubit", "tlf"``.
    """
    try:
        p = PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None
    if subsystem == "qubit":
        return np.kron(p, _EYE2)
    if subsystem == "tlf":
        return np.kron(_EYE2, p)
    raise ValueError(f"unknown subsystem {subsystem!r}")


def tau_ladder(sign: int) -> np.ndarray:
    """Embedded TLF ladder operator, ``sign=+1`` raising, ``-1`` lowering."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    op = TAU_PLUS_2 if sign == +1 else TAU_MINUS_2
    return np.kron(_EYE2, op)


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a fixed phase gauge.

    Returns ``(eps, v)`` with eigenvalues ascending and eigenvectors in the
    columns of ``v``.  Each column is rephased so that its largest-magnitude
    component is real and positive (first such index on ties), which makes
    repeated calls on equal input bitwise reproducible.  Accepts stacks
    ``(..., n, n)``.

    Raises ``ValueError`` if the input is not Hermitian to 1e-12 (relative
    to its largest element).
    """
    h = np.asarray(h)
    scale = max(np.max(np.abs(h)), 1.0)
    if np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian within 1e-12")
    eps, v = np.linalg.eigh(h)
    # gauge fix: largest-|component| entry of each eigenvector real positive
    idx = np.argmax(np.abs(v), axis=-2)
    lead = np.take_along_axis(v, idx[..., None, :], axis=-2)[..., 0, :]
    phase = lead / np.where(np.abs(lead) == 0.0, 1.0, np.abs(lead))
    v = v * np.conj(phase)[..., None, :]
    return eps, v


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential (Pade scaling-and-squaring), stack-capable."""
    return scipy.linalg.expm(np.asarray(m, dtype=complex))


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization of an ``n x n`` matrix (stack-capable)."""
    rho = np.asarray(rho)
    return np.ascontiguousarray(np.swapaxes(rho, -1, -2)).reshape(rho.shape[:-2] + (-1,))


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    n = int(round(np.sqrt(v.shape[-1])))
    if n * n != v.shape[-1]:
        raise ValueError("vector length is not a perfect square")
    if v.ndim == 1:
        return v.reshape((n, n), order="F")
    return np.swapaxes(v.reshape(v.shape[:-1] + (n, n)), -1, -2)


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of left multiplication, ``rho -> a @ rho``."""
    n = a.shape[-1]
    return np.kron(np.eye(n), a)


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator of right multiplication, ``rho -> rho @ b``."""
    n = b.shape[-1]
    return np.kron(b.T, np.eye(n))


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> [h, rho]``."""
    return spre(h) - spost(h)


def conjugation_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of unitary conjugation ``rho -> u @ rho @ u^dag``.

    Raises ``ValueError`` if ``u`` is not unitary to 1e-10.
    """
    u = np.asarray(u, dtype=complex)
    n = u.shape[-1]
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-10:
        raise ValueError("matrix is not unitary within 1e-10")
    return np.kron(u.conj(), u)


def kron_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product broadcast over leading stack axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    (ra, ca), (rb, cb) = a.shape[-2:], b.shape[-2:]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(out.shape[:-4] + (ra * rb, ca * cb))


def partial_trace_tlf(rho: np.ndarray) -> np.ndarray:
    """Trace out the fluctuator from a 4x4 composite state (stack-capable)."""
    rho = np.asarray(rho)
    r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    return np.einsum("...itjt->...ij", r)


def partial_trace_superop() -> np.ndarray:
    """The 4x16 matrix ``P`` with ``P @ vec(rho) = vec(tr_tlf rho)``."""
    p = np.zeros((4, 16), dtype=complex)
    for j in range(4):
        for i in range(4):
            e = np.zeros((4, 4), dtype=complex)
            e[i, j] = 1.0
            p[:, i + 4 * j] = vec(partial_trace_tlf(e))
    return p


def embed_superop(rho_tlf: np.ndarray) -> np.ndarray:
    """The 16x4 matrix ``E`` with ``E @ vec(rho_q) = vec(rho_q (x) rho_tlf)``.

    ``rho_tlf`` must be a valid 2x2 state (Hermitian, unit trace to 1e-10).
    """
    rho_tlf = np.asarray(rho_tlf, dtype=complex)
    if abs(np.trace(rho_tlf) - 1.0) > 1e-10 or np.max(np.abs(rho_tlf - rho_tlf.conj().T)) > 1e-10:
        raise ValueError("rho_tlf is not a valid state")
    e = np.zeros((16, 4), dtype=complex)
    for j in range(2):
        for i in range(2):
            b = np.zeros((2, 2), dtype=complex)
            b[i, j] = 1.0
            e[:, i + 2 * j] = vec(np.kron(b, rho_tlf))
    return e


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats.

    Eigenvalues in ``[-1e-12, 0)`` are clipped to zero; a trace off unity by
    more than 1e-8, or an eigenvalue below -1e-12, raises ``ValueError``.
    """
    rho = np.asarray(rho, dtype=complex)
    if abs(np.trace(rho).real - 1.0) > 1e-8 or abs(np.trace(rho).imag) > 1e-8:
        raise ValueError("state trace differs from 1 by more than 1e-8")
    w = np.linalg.eigvalsh(rho)
    if np.min(w) < -1e-12:
        raise ValueError("state has an eigenvalue below -1e-12")
    w = np.clip(w, 0.0, None)
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)))


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """Bloch vector ``(<sigma_x>, <sigma_y>, <sigma_z>)`` of a qubit state."""
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(PAULI[a] @ rho).real for a in "xyz"])
