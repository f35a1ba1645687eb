"""Two-qubit Deutsch-Jozsa demonstration using the composed cNOT.

Oracle encodings for the four Boolean functions on one bit:
f0(x) = 0 and f1(x) = 1 are constant, f2(x) = x and f3(x) = 1 - x are
balanced. The query register is Q1, the work qubit Q2; the dressing is the
standard phase-kickback circuit built from Y and X rotations, with the
inverse rotation applied to the query qubit only. With ideal gates the
query qubit ends in |0> for constant oracles and |1> for balanced ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadIndex
from .gates import GateChannel, identity_channel, unitary_channel
from .linalg import DensityMatrix, partial_trace, rx, ry

__all__ = ["OracleIndex", "encoding_unitary", "run_dj", "ideal_dj_output"]

_KINDS = ("constant", "constant", "balanced", "balanced")


@dataclass(frozen=True)
class OracleIndex:
    """One of the four one-bit oracles, index 0..3."""

    index: int

    def __post_init__(self):
        if self.index not in (0, 1, 2, 3):
            raise BadIndex(f"oracle index must be 0..3, got {self.index}")

    @property
    def kind(self) -> str:
        return _KINDS[self.index]


def encoding_unitary(oracle: OracleIndex | int, cnot: GateChannel) -> GateChannel:
    """Channel of the oracle's encoding unitary.

    The constant oracles are purely local and never touch the two-qubit
    gate; the balanced ones are the cNOT itself and its Y-conjugated twin.
    """
    if not isinstance(oracle, OracleIndex):
        oracle = OracleIndex(oracle)
    i = oracle.index
    if i == 0:
        return identity_channel()
    if i == 1:
        return unitary_channel(np.kron(np.eye(2, dtype=complex), rx(np.pi)))
    if i == 2:
        return cnot
    wrap_in = unitary_channel(np.kron(ry(-np.pi), np.eye(2, dtype=complex)))
    wrap_out = unitary_channel(np.kron(ry(np.pi), np.eye(2, dtype=complex)))
    return wrap_in.then(cnot).then(wrap_out)


def _dressing_unitaries() -> tuple[np.ndarray, np.ndarray]:
    """(pre, post): |00> -> |+>|-> before the oracle, inverse-Y on the query after."""
    pre = np.kron(ry(np.pi / 2), ry(-np.pi / 2))
    post = np.kron(ry(-np.pi / 2), np.eye(2, dtype=complex))
    return pre, post


def ideal_dj_output(oracle: OracleIndex | int) -> DensityMatrix:
    """Output state of the ideal circuit (query in |0> or |1>, work in |->)."""
    from .gates import canonical_cnot

    rho, _ = run_dj(oracle, unitary_channel(canonical_cnot()))
    return rho


def run_dj(
    oracle: OracleIndex | int,
    cnot: GateChannel,
) -> tuple[DensityMatrix, str]:
    """Run the circuit and classify from the query-qubit marginal.

    Returns the full output density matrix and "constant" or "balanced"
    according to whether the query qubit is more likely found in |0> or |1>.
    """
    if not isinstance(oracle, OracleIndex):
        oracle = OracleIndex(oracle)
    pre, post = _dressing_unitaries()
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    rho = pre @ rho @ pre.conj().T
    rho = encoding_unitary(oracle, cnot).apply(rho)
    rho = post @ rho @ post.conj().T
    out = DensityMatrix((2, 2), rho, validate=False)
    query = partial_trace(out, keep=[0])
    p1 = float(np.real(query.data[1, 1]))
    return out, ("balanced" if p1 > 0.5 else "constant")
