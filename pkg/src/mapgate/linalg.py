"""Dense complex linear algebra primitives.

Tensor products, propagators, partial trace, two-qubit Pauli decompositions
and the fidelity metric used everywhere else. All functions are pure; the
value types are thin wrappers around numpy arrays carrying the subsystem
dimension list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import TOL
from .errors import (
    BadSubsystemIndex,
    DimensionMismatch,
    NonHermitianInput,
)

__all__ = [
    "Operator",
    "DensityMatrix",
    "PauliVector",
    "kron",
    "propagator",
    "partial_trace",
    "state_fidelity",
    "pauli_vector",
    "pauli_assemble",
    "PAULI_1Q",
    "PAULI_2Q",
    "PAULI_2Q_LABELS",
    "ket",
    "projector",
    "rx",
    "ry",
    "rz",
    "global_phase_distance",
]

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_1Q = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)
_PAULI_NAMES = "IXYZ"

# Two-qubit Pauli basis, second qubit fastest: II, IX, IY, IZ, XI, ... ZZ.
# Normalisation: Tr[P_i P_j] = 4 delta_ij.
PAULI_2Q = tuple(
    np.kron(PAULI_1Q[a], PAULI_1Q[b]) for a in range(4) for b in range(4)
)
PAULI_2Q_LABELS = tuple(
    _PAULI_NAMES[a] + _PAULI_NAMES[b] for a in range(4) for b in range(4)
)


def _as_square(data: np.ndarray) -> np.ndarray:
    arr = np.asarray(data, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Operator:
    """A dense complex matrix on a tensor product of finite subsystems."""

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        arr = _as_square(self.data)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 2 for d in self.dims):
            raise DimensionMismatch(f"subsystem dims must all be >= 2, got {self.dims}")
        if int(np.prod(self.dims)) != arr.shape[0]:
            raise DimensionMismatch(
                f"dims {self.dims} imply side {int(np.prod(self.dims))}, matrix is {arr.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.dims, self.data.conj().T)

    def is_hermitian(self, tol: float = TOL.hermiticity) -> bool:
        return float(np.max(np.abs(self.data - self.data.conj().T))) <= tol

    def is_unitary(self, tol: float = TOL.unitarity) -> bool:
        d = self.dim
        return float(np.max(np.abs(self.data.conj().T @ self.data - np.eye(d)))) <= tol

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise DimensionMismatch(f"{self.dims} @ {other.dims}")
        return Operator(self.dims, self.data @ other.data)


@dataclass(frozen=True)
class DensityMatrix:
    """A physical state: Hermitian, unit trace, positive semidefinite."""

    dims: tuple[int, ...]
    data: np.ndarray
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        arr = _as_square(self.data)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if int(np.prod(self.dims)) != arr.shape[0]:
            raise DimensionMismatch(
                f"dims {self.dims} imply side {int(np.prod(self.dims))}, matrix is {arr.shape[0]}"
            )
        if self.validate:
            herm = float(np.max(np.abs(arr - arr.conj().T)))
            if herm > TOL.hermiticity:
                raise NonHermitianInput(f"density matrix deviates from Hermitian by {herm:.2e}")
            tr = complex(np.trace(arr))
            if abs(tr - 1.0) > TOL.trace:
                raise DimensionMismatch(f"trace {tr} != 1")
            evals = np.linalg.eigvalsh(arr)
            if float(evals.min()) < TOL.psd:
                raise DimensionMismatch(f"negative eigenvalue {evals.min():.2e}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class PauliVector:
    """16 real expectation values Tr[P_k rho] in the fixed two-qubit order."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.shape != (16,):
            raise DimensionMismatch(f"expected 16 entries, got shape {arr.shape}")
        object.__setattr__(self, "entries", arr)


def rx(theta: float) -> np.ndarray:
    """exp(-i theta/2 X)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    """exp(-i theta/2 Y)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    """exp(-i theta/2 Z)."""
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex)


def ket(index: int, dims: Sequence[int]) -> np.ndarray:
    """Basis column vector |index> on the product space of ``dims``."""
    n = int(np.prod(dims))
    v = np.zeros(n, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def kron(a: Operator, b: Operator) -> Operator:
    """Kronecker product; result dims are the concatenation of the factors."""
    return Operator(a.dims + b.dims, np.kron(a.data, b.data))


def propagator(h: Operator, t: float) -> Operator:
    """exp(-i h t) for a Hermitian generator, via eigendecomposition.

    ``h`` in rad/ns, ``t`` in ns.
    """
    if not h.is_hermitian():
        dev = float(np.max(np.abs(h.data - h.data.conj().T)))
        raise NonHermitianInput(f"generator deviates from Hermitian by {dev:.2e}")
    evals, vecs = np.linalg.eigh(h.data)
    u = (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T
    return Operator(h.dims, u)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep`` (indices in order)."""
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise BadSubsystemIndex(f"keep={keep} invalid for {n} subsystems")
    dims = rho.dims
    arr = rho.data.reshape(dims + dims)
    # Trace out dropped subsystems from highest index down so axis numbers
    # of the remaining factors stay valid.
    traced = arr
    ndim_left = n
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        traced = np.trace(traced, axis1=q, axis2=q + ndim_left)
        ndim_left -= 1
    new_dims = tuple(dims[k] for k in keep)
    side = int(np.prod(new_dims))
    return DensityMatrix(new_dims, traced.reshape(side, side), validate=False)


def state_fidelity(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Overlap Tr[rho_a rho_b].

    This is the linear overlap form, not the square-root (Uhlmann) fidelity;
    it equals the usual fidelity whenever one argument is pure.
    """
    if rho_a.dims != rho_b.dims:
        raise DimensionMismatch(f"{rho_a.dims} vs {rho_b.dims}")
    return float(np.real(np.trace(rho_a.data @ rho_b.data)))


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-element distance between matrices after optimal global-phase alignment."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.trace(a @ b.conj().T)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def pauli_vector(rho: DensityMatrix) -> PauliVector:
    """Expectation values Tr[P_k rho] over the 16 two-qubit Paulis."""
    if rho.dim != 4:
        raise DimensionMismatch(f"need a 4x4 two-qubit state, got side {rho.dim}")
    vals = np.array([np.real(np.trace(p @ rho.data)) for p in PAULI_2Q])
    return PauliVector(vals)


def pauli_assemble(vec: PauliVector) -> DensityMatrix:
    """Inverse of :func:`pauli_vector`: rho = (1/4) sum_k v_k P_k."""
    acc = np.zeros((4, 4), dtype=complex)
    for v, p in zip(vec.entries, PAULI_2Q):
        acc += v * p
    return DensityMatrix((2, 2), acc / 4.0, validate=False)
