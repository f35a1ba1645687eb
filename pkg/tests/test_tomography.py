import numpy as np
import pytest
from dataclasses import replace

from mapgate.errors import DimensionMismatch, OptimizerFailed
from mapgate.gates import canonical_cnot, unitary_channel
from mapgate.linalg import DensityMatrix, ket, projector, rx, ry, state_fidelity
from mapgate.ptm import depolarizing_ptm, ptm_of_unitary
from mapgate.tomography import (
    MeasurementRecord,
    ReadoutModel,
    betas_from_states,
    prepulse_set,
    process_fidelity,
    readout_expectation,
    reconstruct_ptm_mle,
    reconstruct_state_mle,
    run_qpt,
    run_qst,
    single_qubit_prepulses,
)

MODEL = ReadoutModel()


def dm(mat):
    return DensityMatrix((2, 2), np.asarray(mat, dtype=complex), validate=False)


def random_state(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return dm(rho / np.trace(rho))


# ---------------------------------------------------------------------------
# pre-pulses
# ---------------------------------------------------------------------------

def test_prepulse_set_basics():
    pulses = prepulse_set()
    assert len(pulses) == 36
    assert np.allclose(pulses[0], np.eye(4))
    for p in pulses:
        assert np.max(np.abs(p.conj().T @ p - np.eye(4))) < 1e-12


def test_single_qubit_prepulses_reach_bloch_axes():
    # Bloch-vector oracle by direct state computation
    def bloch(vec):
        rho = projector(vec)
        return np.real([
            np.trace(np.array([[0, 1], [1, 0]]) @ rho),
            np.trace(np.array([[0, -1j], [1j, 0]]) @ rho),
            np.trace(np.array([[1, 0], [0, -1]]) @ rho),
        ])

    singles = single_qubit_prepulses()
    zero = np.array([1, 0], dtype=complex)
    expected = [
        (0, 0, 1),    # I -> +Z
        (0, 0, -1),   # X_pi -> -Z
        (0, -1, 0),   # X_pi/2 -> -Y
        (0, 1, 0),    # X_-pi/2 -> +Y
        (1, 0, 0),    # Y_pi/2 -> +X
        (-1, 0, 0),   # Y_-pi/2 -> -X
    ]
    for u, axis in zip(singles, expected):
        assert np.allclose(bloch(u @ zero), axis, atol=1e-12)


# ---------------------------------------------------------------------------
# readout
# ---------------------------------------------------------------------------

def test_readout_computational_states():
    # direct substitution with the shipped coefficients
    rho00 = dm(np.diag([1, 0, 0, 0]))
    assert readout_expectation(rho00, MODEL) == pytest.approx(5.12)
    assert readout_expectation(dm(np.eye(4) / 4), MODEL) == pytest.approx(2.72)
    cnot = canonical_cnot()
    rho10 = np.zeros((4, 4), dtype=complex)
    rho10[2, 2] = 1.0
    rho11 = cnot @ rho10 @ cnot.conj().T
    assert readout_expectation(dm(rho11), MODEL) == pytest.approx(1.2)


def test_readout_phase_curve():
    # (|00> + e^{i phi}|01>)/sqrt2 probed with Y_pi/2 (x) Y_pi/2 follows
    # beta_II - beta_IZ cos(phi) with the rotation conventions used here
    yy = np.kron(ry(np.pi / 2), ry(np.pi / 2))
    for phi in np.linspace(-np.pi, np.pi, 9):
        vec = np.array([1, np.exp(1j * phi), 0, 0]) / np.sqrt(2)
        rho = yy @ projector(vec) @ yy.conj().T
        got = readout_expectation(dm(rho), MODEL)
        assert got == pytest.approx(2.72 - 0.86 * np.cos(phi), abs=1e-12)


def test_readout_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        readout_expectation(DensityMatrix((2,), np.eye(2) / 2), MODEL)


def test_shot_noise_variance_scaling(rng):
    vec = np.array([1, 1, 1, 1], dtype=complex) / 2  # all states populated
    rho = dm(projector(vec))
    variances = []
    for n in (100, 1000, 10000):
        model = ReadoutModel(shot_count=n)
        vals = [readout_expectation(rho, model, rng) for _ in range(700)]
        variances.append(np.var(vals))
    # variance scales as 1/N within a factor of two
    assert variances[0] / variances[1] == pytest.approx(10.0, rel=0.5)
    assert variances[1] / variances[2] == pytest.approx(10.0, rel=0.5)


def test_shot_noise_multinomial_mode(rng):
    model = ReadoutModel(shot_count=500, sampling="multinomial")
    rho = dm(np.diag([0.5, 0.5, 0, 0]))
    vals = [readout_expectation(rho, model, rng) for _ in range(300)]
    exact = readout_expectation(rho, MODEL)
    assert np.mean(vals) == pytest.approx(exact, abs=0.05)


def test_betas_from_states_roundtrip():
    vals = [
        readout_expectation(dm(np.diag([1, 0, 0, 0])), MODEL),
        readout_expectation(dm(np.diag([0, 1, 0, 0])), MODEL),
        readout_expectation(dm(np.diag([0, 0, 1, 0])), MODEL),
        readout_expectation(dm(np.diag([0, 0, 0, 1])), MODEL),
    ]
    fit = betas_from_states(vals)
    assert fit.beta_ii == pytest.approx(2.72)
    assert fit.beta_zi == pytest.approx(1.10)
    assert fit.beta_iz == pytest.approx(0.86)
    assert fit.beta_zz == pytest.approx(0.44)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

def test_run_qst_values_match_direct_oracle():
    vec = (ket(0, (2, 2)) + ket(3, (2, 2))) / np.sqrt(2)
    rho = dm(projector(vec))
    record = run_qst(rho, None, MODEL)
    assert len(record.settings) == 36
    pulses = prepulse_set()
    for (prep, j), val in zip(record.settings, record.values):
        assert prep == -1
        direct = readout_expectation(dm(pulses[j] @ rho.data @ pulses[j].conj().T), MODEL)
        assert val == pytest.approx(direct, abs=1e-10)


def test_run_qst_identity_gate_equivalence():
    rho = dm(np.diag([1, 0, 0, 0]))
    a = run_qst(rho, None, MODEL)
    b = run_qst(rho, unitary_channel(np.eye(4, dtype=complex)), MODEL)
    assert np.allclose(a.values, b.values)


def test_run_qpt_record_shape_and_values():
    ch = unitary_channel(canonical_cnot())
    record = run_qpt(ch, MODEL)
    assert len(record.settings) == 1296
    # setting (prep = X_pi on Q1 -> |10>, prepulse = I (x) I): cNOT|10> = |11>
    idx = record.settings.index((6, 0))  # prep index 6 = X_pi (x) I
    assert record.values[idx] == pytest.approx(1.2)


def test_run_qpt_identity_self_consistency(rng):
    # setting (i, j) of the identity channel equals a QST of prep i probed by j
    ch = unitary_channel(np.eye(4, dtype=complex))
    record = run_qpt(ch, MODEL)
    pulses = prepulse_set()
    values = dict(zip(record.settings, record.values))
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    for _ in range(20):
        i = int(rng.integers(36))
        j = int(rng.integers(36))
        rho_i = pulses[i] @ rho00 @ pulses[i].conj().T
        direct = readout_expectation(
            dm(pulses[j] @ rho_i @ pulses[j].conj().T), MODEL
        )
        assert values[(i, j)] == pytest.approx(direct, abs=1e-12)


def test_record_csv_roundtrip(tmp_path, rng):
    ch = unitary_channel(canonical_cnot())
    record = run_qst(dm(np.eye(4) / 4), ch, ReadoutModel(shot_count=200), rng=rng)
    path = tmp_path / "rec.csv"
    record.to_csv(path)
    back = MeasurementRecord.from_csv(path)
    assert back.settings == record.settings
    assert np.array_equal(back.values, record.values)
    assert back.shots == 200


def test_record_rejects_duplicates():
    with pytest.raises(DimensionMismatch):
        MeasurementRecord((( -1, 0), (-1, 0)), np.array([1.0, 2.0]))


# ---------------------------------------------------------------------------
# state reconstruction
# ---------------------------------------------------------------------------

def test_state_mle_zero_state():
    rho = dm(np.diag([1, 0, 0, 0]))
    rec = run_qst(rho, None, MODEL)
    rho_hat = reconstruct_state_mle(rec, MODEL)
    assert state_fidelity(rho, rho_hat) >= 0.9999


def test_state_mle_bell_state():
    vec = (ket(0, (2, 2)) + ket(3, (2, 2))) / np.sqrt(2)
    rho = dm(projector(vec))
    rec = run_qst(rho, None, MODEL)
    rho_hat = reconstruct_state_mle(rec, MODEL)
    assert state_fidelity(rho, rho_hat) >= 0.999


def test_state_mle_local_optimality(rng):
    from mapgate.tomography import _qst_design

    rho = random_state(rng)
    rec = run_qst(rho, None, ReadoutModel(shot_count=400), rng=rng)
    rho_hat = reconstruct_state_mle(rec, MODEL)
    a_ops = _qst_design(MODEL, [j for _, j in rec.settings])

    def rss(r):
        v = np.real(np.einsum("jab,ba->j", a_ops, r))
        return float(np.sum((v - rec.values) ** 2))

    base = rss(rho_hat.data)
    for _ in range(10):
        d = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        d = (d + d.conj().T) / 2
        d -= np.trace(d) / 4 * np.eye(4)
        pert = rho_hat.data + 1e-3 * d
        evals = np.linalg.eigvalsh(pert)
        if evals.min() < 0:
            continue
        assert rss(pert) >= base - 1e-12


def test_state_mle_always_physical(rng):
    for _ in range(25):
        rho = random_state(rng)
        rec = run_qst(rho, None, ReadoutModel(shot_count=150), rng=rng)
        rho_hat = reconstruct_state_mle(rec, MODEL)
        assert abs(np.trace(rho_hat.data) - 1) < 1e-10
        assert np.max(np.abs(rho_hat.data - rho_hat.data.conj().T)) < 1e-12
        assert np.linalg.eigvalsh(rho_hat.data).min() >= -1e-12


def test_state_mle_insufficient_record():
    rec = MeasurementRecord(
        tuple((-1, j) for j in range(10)), np.zeros(10)
    )
    with pytest.raises(OptimizerFailed):
        reconstruct_state_mle(rec, MODEL)


# ---------------------------------------------------------------------------
# process reconstruction
# ---------------------------------------------------------------------------

def test_ptm_mle_cnot_roundtrip():
    rec = run_qpt(unitary_channel(canonical_cnot()), MODEL)
    r_hat = reconstruct_ptm_mle(rec, MODEL)
    r_ideal = ptm_of_unitary(canonical_cnot())
    assert process_fidelity(r_hat, r_ideal) >= 0.999
    assert r_hat.tp_residual() < 1e-6
    assert r_hat.cp_min_eigenvalue() >= -1e-6


def test_ptm_mle_zgate_roundtrip():
    u = np.kron(np.diag([1.0, 1j]), np.eye(2))
    rec = run_qpt(unitary_channel(u), MODEL)
    r_hat = reconstruct_ptm_mle(rec, MODEL)
    assert process_fidelity(r_hat, ptm_of_unitary(u)) >= 0.999


def test_ptm_mle_depolarizing_oracle():
    from mapgate.gates import GateChannel

    p = 0.35
    ch = GateChannel(kind="superoperator", duration=0.0, r=depolarizing_ptm(p).r,
                     validate=False)
    rec = run_qpt(ch, MODEL)
    r_hat = reconstruct_ptm_mle(rec, MODEL)
    assert np.max(np.abs(r_hat.r - depolarizing_ptm(p).r)) < 1e-3


def test_ptm_mle_with_shot_noise_stays_physical(rng):
    rec = run_qpt(unitary_channel(canonical_cnot()), ReadoutModel(shot_count=300), rng=rng)
    r_hat = reconstruct_ptm_mle(rec, MODEL)
    assert r_hat.tp_residual() < 1e-6
    assert r_hat.cp_min_eigenvalue() >= -1e-6
    assert np.all(np.abs(r_hat.r) <= 1 + 1e-6)


def test_ptm_mle_needs_full_record():
    rec = MeasurementRecord(tuple((i, j) for i in range(2) for j in range(36)),
                            np.zeros(72))
    with pytest.raises(OptimizerFailed):
        reconstruct_ptm_mle(rec, MODEL)
