import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapgate.errors import (
    BadSubsystemIndex,
    DimensionMismatch,
    NonHermitianInput,
)
from mapgate.linalg import (
    DensityMatrix,
    Operator,
    PAULI_2Q,
    PAULI_2Q_LABELS,
    global_phase_distance,
    ket,
    kron,
    partial_trace,
    pauli_assemble,
    pauli_vector,
    projector,
    propagator,
    rx,
    ry,
    rz,
    state_fidelity,
)

I2 = Operator((2,), np.eye(2))
X = Operator((2,), np.array([[0, 1], [1, 0]], dtype=complex))


def random_density(rng, dims=(2, 2)):
    n = int(np.prod(dims))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return DensityMatrix(dims, rho / np.trace(rho))


def test_kron_identities():
    assert np.allclose(kron(I2, I2).data, np.eye(4))
    assert kron(I2, I2).dims == (2, 2)


def test_kron_basis_action():
    psi00 = ket(0, (2, 2))
    out = kron(X, I2).data @ psi00
    assert np.allclose(out, ket(2, (2, 2)))  # |00> -> |10>


def test_kron_dims_concatenate():
    a = Operator((2, 3), np.eye(6))
    b = Operator((4,), np.eye(4))
    assert kron(a, b).dims == (2, 3, 4)


def test_kron_associative():
    rng = np.random.default_rng(7)
    ops = [Operator((d,), rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
           for d in (2, 3, 2)]
    left = kron(kron(ops[0], ops[1]), ops[2])
    right = kron(ops[0], kron(ops[1], ops[2]))
    assert np.max(np.abs(left.data - right.data)) < 1e-15


def test_propagator_zero_generator():
    h = Operator((2, 2), np.zeros((4, 4)))
    assert np.allclose(propagator(h, 123.4).data, np.eye(4))


def test_propagator_rabi_half_period():
    omega = 0.05
    h = Operator((2,), omega / 2 * np.array([[0, 1], [1, 0]], dtype=complex))
    u = propagator(h, np.pi / omega)
    assert np.allclose(u.data, -1j * X.data, atol=1e-12)


def test_propagator_diagonal_oracle():
    # independent oracle: scalar exponentiation of each diagonal entry
    w = 0.7312
    h = Operator((2,), np.diag([0.0, w]).astype(complex))
    for t in (0.3, 2.0, 17.9):
        expected = np.diag([1.0, np.exp(-1j * w * t)])
        assert np.allclose(propagator(h, t).data, expected, atol=1e-12)


def test_propagator_requires_hermitian():
    h = Operator((2,), np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(NonHermitianInput):
        propagator(h, 1.0)


def test_propagator_unitary_property():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = Operator((2, 4), a + a.conj().T)
        u = propagator(h, rng.uniform(0, 10))
        assert u.is_unitary(1e-9)


def test_partial_trace_product_state():
    rng = np.random.default_rng(5)
    rho_a = random_density(rng, (2,))
    rho_b = random_density(rng, (3,))
    joint = DensityMatrix((2, 3), np.kron(rho_a.data, rho_b.data))
    assert np.allclose(partial_trace(joint, [0]).data, rho_a.data, atol=1e-12)
    assert np.allclose(partial_trace(joint, [1]).data, rho_b.data, atol=1e-12)


def test_partial_trace_bell_marginal():
    bell = (ket(0, (2, 2)) + ket(3, (2, 2))) / np.sqrt(2)
    rho = DensityMatrix((2, 2), projector(bell))
    assert np.allclose(partial_trace(rho, [0]).data, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_order_independence():
    rng = np.random.default_rng(11)
    rho = random_density(rng, (2, 3, 2))
    a = partial_trace(partial_trace(rho, [0, 1]), [0])
    b = partial_trace(rho, [0])
    assert np.allclose(a.data, b.data, atol=1e-12)
    assert abs(np.trace(b.data) - 1.0) < 1e-12


def test_partial_trace_bad_subsystem():
    rho = random_density(np.random.default_rng(0))
    with pytest.raises(BadSubsystemIndex):
        partial_trace(rho, [5])
    with pytest.raises(BadSubsystemIndex):
        partial_trace(rho, [])


def test_state_fidelity_pure_cases():
    psi = projector(ket(0, (2, 2)))
    phi = projector(ket(1, (2, 2)))
    a = DensityMatrix((2, 2), psi)
    b = DensityMatrix((2, 2), phi)
    assert state_fidelity(a, a) == pytest.approx(1.0)
    assert state_fidelity(a, b) == pytest.approx(0.0)


def test_state_fidelity_pure_vs_mixed():
    plus = (ket(0, (2,)) + ket(1, (2,))) / np.sqrt(2)
    a = DensityMatrix((2,), projector(plus))
    b = DensityMatrix((2,), np.eye(2) / 2)
    # Tr[|+><+| I/2] = 1/2, computed directly
    assert state_fidelity(a, b) == pytest.approx(0.5)


def test_state_fidelity_symmetric():
    rng = np.random.default_rng(13)
    a, b = random_density(rng), random_density(rng)
    assert state_fidelity(a, b) == pytest.approx(state_fidelity(b, a), abs=1e-14)


def test_state_fidelity_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        state_fidelity(
            random_density(np.random.default_rng(0), (2,)),
            random_density(np.random.default_rng(0), (2, 2)),
        )


def test_pauli_vector_00():
    rho = DensityMatrix((2, 2), projector(ket(0, (2, 2))))
    v = pauli_vector(rho).entries
    expect = {lbl: 0.0 for lbl in PAULI_2Q_LABELS}
    expect.update({"II": 1.0, "IZ": 1.0, "ZI": 1.0, "ZZ": 1.0})
    for lbl, val in zip(PAULI_2Q_LABELS, v):
        assert val == pytest.approx(expect[lbl], abs=1e-12)


def test_pauli_vector_maximally_mixed():
    rho = DensityMatrix((2, 2), np.eye(4) / 4)
    v = pauli_vector(rho).entries
    assert v[0] == pytest.approx(1.0)
    assert np.allclose(v[1:], 0.0, atol=1e-14)


def test_pauli_vector_rejects_single_qubit():
    with pytest.raises(DimensionMismatch):
        pauli_vector(random_density(np.random.default_rng(0), (2,)))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_pauli_roundtrip_random(seed):
    rho = random_density(np.random.default_rng(seed))
    back = pauli_assemble(pauli_vector(rho))
    assert np.max(np.abs(back.data - rho.data)) < 1e-12


def test_pauli_basis_normalisation():
    for i, p in enumerate(PAULI_2Q):
        for j, q in enumerate(PAULI_2Q):
            assert np.trace(p @ q) == pytest.approx(4.0 if i == j else 0.0, abs=1e-13)


def test_rotation_conventions():
    # R_n(theta) = exp(-i theta/2 n.sigma); Bloch axes reached from |0>
    zero = np.array([1, 0], dtype=complex)
    assert np.allclose(ry(np.pi / 2) @ zero, np.array([1, 1]) / np.sqrt(2))
    assert np.allclose(rx(np.pi / 2) @ zero, np.array([1, -1j]) / np.sqrt(2))
    assert np.allclose(abs(rx(np.pi) @ zero), np.array([0, 1]))
    assert np.allclose(rz(np.pi) @ np.diag([1, 1]) @ rz(-np.pi), np.eye(2))


def test_density_matrix_validation():
    with pytest.raises(NonHermitianInput):
        DensityMatrix((2,), np.array([[0.5, 1.0], [0.0, 0.5]], dtype=complex))
    with pytest.raises(DimensionMismatch):
        DensityMatrix((2,), np.eye(2))  # trace 2


def test_global_phase_distance():
    u = rx(0.7)
    assert global_phase_distance(u, np.exp(1j * 1.23) * u) < 1e-12
    assert global_phase_distance(np.eye(2), rx(np.pi)) > 0.5
