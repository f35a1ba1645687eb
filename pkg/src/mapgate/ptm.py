"""Pauli transfer matrices and channel representation conversions.

A two-qubit channel E is represented by the real 16x16 matrix
R_jk = Tr[P_j E(P_k)] / 4 acting on Pauli expectation vectors, by a
column-stacking superoperator, or by its (unnormalised) Choi matrix
C = sum_mn |m><n| (x) E(|m><n|). Trace preservation is the first PTM row
being e_1, equivalently Tr_out[C] = I; complete positivity is C >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import TOL
from .errors import DimensionMismatch, NonUnitaryInput
from .linalg import PAULI_2Q

__all__ = [
    "PauliTransferMatrix",
    "ptm_of_unitary",
    "ptm_of_kraus",
    "ptm_of_superop",
    "superop_of_ptm",
    "ptm_to_choi",
    "choi_to_ptm",
    "apply_ptm",
    "compose_ptm",
    "choi_tp_project",
    "choi_cp_project",
    "choi_cptp_project",
    "kron_superop",
    "process_fidelity",
    "depolarizing_ptm",
]

_D = 4  # two-qubit Hilbert space dimension

# Unitary basis-change matrix: columns are vec(P_k)/2 (column stacking).
_PAULI_VEC = np.column_stack([p.reshape(-1, order="F") for p in PAULI_2Q]) / 2.0


@dataclass(frozen=True)
class PauliTransferMatrix:
    """Real 16x16 map on two-qubit Pauli expectation vectors."""

    r: np.ndarray
    d: int = 4
    cp_enforced: bool = field(default=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.r, dtype=float)
        if arr.shape != (16, 16):
            raise DimensionMismatch(f"transfer matrix must be 16x16, got {arr.shape}")
        object.__setattr__(self, "r", arr)

    def tp_residual(self) -> float:
        """Max deviation of the first row from (1, 0, ..., 0)."""
        target = np.zeros(16)
        target[0] = 1.0
        return float(np.max(np.abs(self.r[0] - target)))

    def cp_min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the reconstructed Choi matrix."""
        choi = ptm_to_choi(self.r)
        return float(np.linalg.eigvalsh(choi).min())


def ptm_of_unitary(u: np.ndarray) -> PauliTransferMatrix:
    """R_jk = Tr[P_j u P_k u^dag] / d for a 4x4 unitary."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (_D, _D):
        raise DimensionMismatch(f"need a 4x4 unitary, got {u.shape}")
    if float(np.max(np.abs(u.conj().T @ u - np.eye(_D)))) > TOL.unitarity:
        raise NonUnitaryInput("matrix is not unitary within tolerance")
    return ptm_of_kraus([u])


def ptm_of_kraus(kraus_ops) -> PauliTransferMatrix:
    """Transfer matrix of sum_k K rho K^dag (no TP requirement)."""
    s = np.zeros((16, 16), dtype=complex)
    for k in kraus_ops:
        k = np.asarray(k, dtype=complex)
        s += np.kron(k.conj(), k)
    return ptm_of_superop(s)


def ptm_of_superop(s: np.ndarray) -> PauliTransferMatrix:
    """Convert a column-stacking superoperator to a transfer matrix."""
    s = np.asarray(s, dtype=complex)
    if s.shape != (16, 16):
        raise DimensionMismatch(f"two-qubit superoperator must be 16x16, got {s.shape}")
    r = _PAULI_VEC.conj().T @ s @ _PAULI_VEC
    return PauliTransferMatrix(np.real(r))


def superop_of_ptm(r: np.ndarray) -> np.ndarray:
    """Inverse of :func:`ptm_of_superop`."""
    r = np.asarray(r, dtype=float)
    return _PAULI_VEC @ r @ _PAULI_VEC.conj().T


def ptm_to_choi(r: np.ndarray) -> np.ndarray:
    """C = (1/4) sum_jk R_jk (P_k^T (x) P_j); input side first, Tr=4 if TP."""
    r = np.asarray(r, dtype=float)
    c = np.zeros((16, 16), dtype=complex)
    for j in range(16):
        for k in range(16):
            if r[j, k] != 0.0:
                c += r[j, k] * np.kron(PAULI_2Q[k].T, PAULI_2Q[j])
    return c / _D


def choi_to_ptm(choi: np.ndarray) -> PauliTransferMatrix:
    """R_jk = Tr[(P_k^T (x) P_j) C] / 4."""
    choi = np.asarray(choi, dtype=complex)
    r = np.empty((16, 16))
    for j in range(16):
        for k in range(16):
            r[j, k] = np.real(np.trace(np.kron(PAULI_2Q[k].T, PAULI_2Q[j]) @ choi)) / _D
    return PauliTransferMatrix(r)


def apply_ptm(r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a transfer matrix to a 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    p_in = np.array([np.real(np.trace(p @ rho)) for p in PAULI_2Q])
    p_out = np.asarray(r, dtype=float) @ p_in
    out = np.zeros((4, 4), dtype=complex)
    for v, p in zip(p_out, PAULI_2Q):
        out += v * p
    return out / _D


def compose_ptm(r_second: np.ndarray, r_first: np.ndarray) -> np.ndarray:
    """Transfer matrix of 'first then second'."""
    return np.asarray(r_second) @ np.asarray(r_first)


def choi_tp_project(choi: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the affine subspace Tr_out[C] = I."""
    choi = np.asarray(choi, dtype=complex)
    c4 = choi.reshape(4, 4, 4, 4)
    tr_out = np.einsum("ikjk->ij", c4)
    delta = tr_out - np.eye(4)
    return choi - np.kron(delta, np.eye(4)) / 4.0


def choi_cp_project(choi: np.ndarray) -> np.ndarray:
    """Project onto the PSD cone by clipping negative eigenvalues."""
    choi = np.asarray(choi, dtype=complex)
    herm = (choi + choi.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(herm)
    evals = np.clip(evals, 0.0, None)
    return (vecs * evals) @ vecs.conj().T


def choi_cptp_project(
    choi: np.ndarray, tol: float = 1e-10, max_iter: int = 2000
) -> np.ndarray:
    """Dykstra alternating projections onto CP intersect TP."""
    x = np.asarray(choi, dtype=complex)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        y = choi_cp_project(x + p)
        p = x + p - y
        x_new = choi_tp_project(y + q)
        q = y + q - x_new
        change = float(np.max(np.abs(x_new - x)))
        x = x_new
        if change < tol:
            break
    return x


def kron_superop(s1: np.ndarray, s2: np.ndarray, d1: int = 2, d2: int = 2) -> np.ndarray:
    """Superoperator of the tensor-product map E1 (x) E2 (column stacking)."""
    t1 = np.asarray(s1, dtype=complex).reshape(d1, d1, d1, d1)
    t2 = np.asarray(s2, dtype=complex).reshape(d2, d2, d2, d2)
    big = np.einsum("aceg,bdfh->abcdefgh", t1, t2)
    d = d1 * d2
    return big.reshape(d * d, d * d)


def process_fidelity(r_exp: PauliTransferMatrix, r_ideal: PauliTransferMatrix) -> float:
    """(Tr[R_ideal^T R_exp] + d) / (d^2 + d) with d = 4."""
    if r_exp.r.shape != (16, 16) or r_ideal.r.shape != (16, 16):
        raise DimensionMismatch("both transfer matrices must be 16x16")
    d = _D
    return float((np.trace(r_ideal.r.T @ r_exp.r) + d) / (d * d + d))


def depolarizing_ptm(p: float) -> PauliTransferMatrix:
    """Two-qubit depolarizing channel: identity on II, (1-p) elsewhere."""
    r = np.eye(16) * (1.0 - p)
    r[0, 0] = 1.0
    return PauliTransferMatrix(r)
