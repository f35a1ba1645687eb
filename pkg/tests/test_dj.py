import numpy as np
import pytest

from mapgate.dj import OracleIndex, encoding_unitary, ideal_dj_output, run_dj
from mapgate.errors import BadIndex
from mapgate.gates import canonical_cnot, compose_cnot, unitary_channel
from mapgate.linalg import partial_trace, ry, state_fidelity
from mapgate.ptm import depolarizing_ptm, process_fidelity, ptm_of_unitary

IDEAL_CNOT = unitary_channel(canonical_cnot())
KINDS = ["constant", "constant", "balanced", "balanced"]


def test_oracle_index_validation():
    assert OracleIndex(0).kind == "constant"
    assert OracleIndex(3).kind == "balanced"
    with pytest.raises(BadIndex):
        OracleIndex(4)


def test_encoding_identity():
    ch = encoding_unitary(0, IDEAL_CNOT)
    assert np.allclose(ch.u, np.eye(4))


def test_encoding_x_on_work_qubit():
    ch = encoding_unitary(1, IDEAL_CNOT)
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    out = ch.apply(rho00)
    assert out[1, 1].real == pytest.approx(1.0)  # |00> -> |01>


def test_encoding_u3_matrix_oracle():
    ch = encoding_unitary(3, IDEAL_CNOT)
    direct = np.kron(ry(np.pi), np.eye(2)) @ canonical_cnot() @ np.kron(ry(-np.pi), np.eye(2))
    assert np.max(np.abs(ch.u - direct)) < 1e-12


def test_ideal_classification_deterministic():
    for i in range(4):
        rho, cls = run_dj(i, IDEAL_CNOT)
        assert cls == KINDS[i]
        query = partial_trace(rho, [0]).data
        outcome = query[1, 1].real if cls == "balanced" else query[0, 0].real
        assert outcome >= 1 - 1e-9


def test_constant_oracles_independent_of_cnot_quality():
    # constant encodings are local; a useless cNOT must not change them
    junk = compose = None
    from mapgate.gates import GateChannel

    junk = GateChannel(kind="superoperator", duration=1.0,
                       r=depolarizing_ptm(0.9).r, validate=False)
    for i in (0, 1):
        rho_good, cls_good = run_dj(i, IDEAL_CNOT)
        rho_junk, cls_junk = run_dj(i, junk)
        assert cls_good == cls_junk == "constant"
        assert np.max(np.abs(rho_good.data - rho_junk.data)) < 1e-12


def test_noisy_cnot_classification_and_contrast(spec, map_cal):
    noisy_cnot = compose_cnot(spec, map_cal, with_noise=True)
    fg = process_fidelity(noisy_cnot.ptm(), ptm_of_unitary(canonical_cnot()))
    assert fg > 0.5
    fidelities = {}
    for i in range(4):
        rho, cls = run_dj(i, noisy_cnot)
        assert cls == KINDS[i]
        fidelities[i] = state_fidelity(ideal_dj_output(i), rho)
    # the balanced runs use the imperfect two-qubit gate: lower contrast
    assert max(fidelities[2], fidelities[3]) < min(fidelities[0], fidelities[1])


def test_depolarized_cnot_still_classifies():
    # monotone-contrast property over the simulated noise range
    from mapgate.gates import GateChannel
    from mapgate.ptm import compose_ptm

    for p in (0.1, 0.3, 0.5):
        r = compose_ptm(depolarizing_ptm(p).r, ptm_of_unitary(canonical_cnot()).r)
        ch = GateChannel(kind="superoperator", duration=1.0, r=r, validate=False)
        assert process_fidelity(ch.ptm(), ptm_of_unitary(canonical_cnot())) > 0.5
        for i in range(4):
            _, cls = run_dj(i, ch)
            assert cls == KINDS[i]
