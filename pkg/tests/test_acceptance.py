"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines and the reported values.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from mapgate.constants import GHZ, MHZ, US
from mapgate.device import (
    calibrate_coupling,
    default_device_spec,
    default_flux_grid,
    level_alignment_scan,
)
from mapgate.gates import (
    calibrate_z_phase_map,
    canonical_cnot,
    compose_cnot,
    ideal_map_unitary,
    unitary_channel,
    z_phase_gate,
    _two_level_sech_unitary,
)
from mapgate.linalg import (
    DensityMatrix,
    Operator,
    global_phase_distance,
    ket,
    projector,
    state_fidelity,
)
from mapgate.pulse import Drive, NoiseSpec, SechPulse, evolve_lindblad, evolve_unitary, sech_envelope
from mapgate.ptm import depolarizing_ptm, process_fidelity, ptm_of_unitary
from mapgate.tomography import (
    ReadoutModel,
    reconstruct_ptm_mle,
    reconstruct_state_mle,
    run_qpt,
    run_qst,
)

DETUNING_GRID = np.arange(-5.0, 5.5, 1.0)


def report(num, name, elapsed, limit, ok, details):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {num:2d} [{name}]: {status} ({elapsed:.1f}s / limit {limit:.0f}s) {details}")


def test_criterion_01_sech_transparency():
    t0 = time.perf_counter()
    w01 = 5.0
    h = Operator((2,), np.diag([0.0, w01 * GHZ]))
    worst = 0.0
    for d in DETUNING_GRID:
        p = SechPulse.from_length(400.0, carrier_detuning=d)
        drv = Drive(0, lambda t, pp=p: sech_envelope(pp, t), w01 + d * 1e-3)
        u = evolve_unitary(h, [drv], 400.0, 0.25, frame_ghz=(w01,))
        worst = max(worst, abs(u.data[1, 0]) ** 2)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 10.0
    report(1, "sech transparency", elapsed, 10,
           ok, f"worst excited population {worst:.2e} over {len(DETUNING_GRID)} detunings")
    assert worst < 1e-3
    assert elapsed < 10.0


def test_criterion_02_phase_law():
    t0 = time.perf_counter()
    pm = calibrate_z_phase_map(400.0, DETUNING_GRID, dt=0.25)
    residual = pm.max_residual
    elapsed = time.perf_counter() - t0
    ok = residual <= 0.02 and elapsed < 30.0
    report(2, "sech phase law", elapsed, 30, ok,
           f"rho_eff = {pm.rho_eff:.6f} rad/ns vs pi/(2 sigma) = {pm.rho_analytic:.6f}, "
           f"max residual {residual:.2e} rad")
    assert residual <= 0.02
    assert elapsed < 30.0


def test_criterion_03_avoided_crossing_calibration():
    t0 = time.perf_counter()
    spec = calibrate_coupling(default_device_spec(), 15.0)
    res = level_alignment_scan(spec, default_flux_grid(spec, step_mhz=0.1))
    elapsed = time.perf_counter() - t0
    ok = abs(res.delta - 15.0) <= 0.15 and elapsed < 10.0
    report(3, "avoided-crossing calibration", elapsed, 10, ok,
           f"splitting {res.delta:.4f} MHz (target 15 +- 0.15), j_eff = {spec.j_eff:.4f} MHz")
    assert abs(res.delta - 15.0) <= 0.15
    assert elapsed < 10.0


def test_criterion_04_out_of_phase_time(spec):
    from mapgate.calibration import (
        RAMSEY_ACQUISITION_RISE_NS,
        find_tg,
        stark_ramsey,
        tune_stark_tone,
    )

    t0 = time.perf_counter()
    tone, flux, info = tune_stark_tone(spec, target_beat_mhz=0.467)
    acq = replace(tone, rise_fall=RAMSEY_ACQUISITION_RISE_NS)
    delays = np.arange(2 * acq.rise_fall + 4.0, 2400.0, 8.0)
    tr0 = stark_ramsey(spec, acq, 0, delays, flux_offset=flux)
    tr1 = stark_ramsey(spec, acq, 1, delays, flux_offset=flux)
    t_g = find_tg(tr0, tr1)
    elapsed = time.perf_counter() - t0
    beat = abs(tr0.fitted_freq - tr1.fitted_freq)
    ok = abs(t_g - 1070.0) <= 0.05 * 1070.0 and elapsed < 120.0
    report(4, "out-of-phase time", elapsed, 120, ok,
           f"|d_eps - d_eps'| = {beat:.4f} MHz, t_g = {t_g:.1f} ns (1070 +- 5%)")
    assert abs(beat - 0.467) < 0.005
    assert abs(t_g - 1070.0) <= 0.05 * 1070.0
    assert elapsed < 120.0


def test_criterion_05_ideal_cnot_algebra(phase_map_400):
    t0 = time.perf_counter()
    # conditional gate with phases, followed by the exact Z corrections
    phi_prime = 0.8321
    u_map = ideal_map_unitary(0.0, phi_prime).data
    z1 = np.diag([1.0, np.exp(-1j * phi_prime)])
    z2 = np.eye(2)
    u = np.kron(z1, z2) @ u_map
    dist = global_phase_distance(u, canonical_cnot())
    # and the unit-phase case is the cNOT itself
    dist0 = global_phase_distance(ideal_map_unitary(0.0, 0.0).data, canonical_cnot())
    elapsed = time.perf_counter() - t0
    ok = dist < 1e-9 and dist0 < 1e-9 and elapsed < 1.0
    report(5, "ideal cNOT algebra", elapsed, 1, ok,
           f"operator distance {dist:.2e} (corrected), {dist0:.2e} (unit phases)")
    assert dist < 1e-9
    assert dist0 < 1e-9
    assert elapsed < 1.0


def test_criterion_06_tomography_round_trip():
    t0 = time.perf_counter()
    model = ReadoutModel()
    rec = run_qpt(unitary_channel(canonical_cnot()), model)
    r_hat = reconstruct_ptm_mle(rec, model)
    fg = process_fidelity(r_hat, ptm_of_unitary(canonical_cnot()))

    bell = (ket(0, (2, 2)) + ket(3, (2, 2))) / np.sqrt(2)
    rho_bell = DensityMatrix((2, 2), projector(bell))
    rec_state = run_qst(rho_bell, None, model)
    rho_hat = reconstruct_state_mle(rec_state, model)
    f_state = state_fidelity(rho_bell, rho_hat)
    elapsed = time.perf_counter() - t0
    ok = fg >= 0.999 and f_state >= 0.999 and elapsed < 300.0
    report(6, "tomography round trip", elapsed, 300, ok,
           f"QPT F_g = {fg:.6f}, QST Bell fidelity = {f_state:.6f}")
    assert fg >= 0.999
    assert f_state >= 0.999
    assert elapsed < 300.0


def test_criterion_07_single_qubit_z_qpt(spec, phase_map_300, rng):
    t0 = time.perf_counter()
    model = ReadoutModel()
    detuning = phase_map_300.detuning_for(np.pi / 2)
    ideal = ptm_of_unitary(np.kron(np.diag([1.0, 1j]), np.eye(2)))

    gate0 = z_phase_gate(1, detuning, 300.0, simulate=True, spec=spec,
                         phase_map=phase_map_300)
    fg0 = process_fidelity(reconstruct_ptm_mle(run_qpt(gate0, model), model), ideal)

    noise = NoiseSpec.from_device(spec)
    gate1 = z_phase_gate(1, detuning, 300.0, simulate=True, spec=spec, noise=noise,
                         phase_map=phase_map_300)
    rec = run_qpt(gate1, ReadoutModel(shot_count=10_000), rng=rng)
    fg1 = process_fidelity(reconstruct_ptm_mle(rec, model), ideal)
    elapsed = time.perf_counter() - t0
    ok = fg0 >= 0.99 and fg1 >= 0.90 and elapsed < 300.0
    report(7, "Z(pi/2) x I process tomography", elapsed, 300, ok,
           f"noiseless F_g = {fg0:.4f} (>= 0.99), decoherent+shots F_g = {fg1:.4f} (>= 0.90)")
    assert fg0 >= 0.99
    assert fg1 >= 0.90
    assert elapsed < 300.0


def test_criterion_08_decoherence_bracket(spec, map_cal):
    t0 = time.perf_counter()
    model = ReadoutModel()
    cnot_noisy = compose_cnot(spec, map_cal, with_noise=True)
    assert cnot_noisy.duration == pytest.approx(map_cal.t_g + 400.0)
    rec = run_qpt(cnot_noisy, model)
    fg = process_fidelity(reconstruct_ptm_mle(rec, model), ptm_of_unitary(canonical_cnot()))

    # Ramsey-contrast factor of a superposition dephasing with T2* = 5 us
    noise = NoiseSpec(t1=(21.0, 21.0), t2star=(5.0, 5.0))
    h = Operator((2,), np.diag([0.0, 5.0 * GHZ]))
    plus = DensityMatrix((2,), np.full((2, 2), 0.5, dtype=complex))
    rho = evolve_lindblad(plus, h, [], noise, 1070.0, 1.0, frame_ghz=(5.0,))
    contrast = abs(rho.data[0, 1]) / 0.5
    elapsed = time.perf_counter() - t0
    ok = 0.65 <= fg <= 0.95 and abs(contrast - 0.807) <= 0.02 and elapsed < 900.0
    report(8, "decoherence bracket", elapsed, 900, ok,
           f"decoherent cNOT F_g = {fg:.4f} in [0.65, 0.95], "
           f"contrast at 1.07 us = {contrast:.4f} (0.807 +- 0.02)")
    assert 0.65 <= fg <= 0.95
    assert abs(contrast - 0.807) <= 0.02
    assert elapsed < 900.0


def test_criterion_09_sweep_formulas(spec, map_cal, phase_map_400):
    from mapgate.calibration import sweep_delta1, sweep_delta2

    t0 = time.perf_counter()
    b_ii, b_zi, b_iz, b_zz = 2.72, 1.10, 0.86, 0.44
    grid = np.linspace(-5.0, 5.0, 41)

    phi0 = 0.3173
    cal = replace(map_cal, phi=phi0, phi_prime=-0.52, delta1=0.0, delta2=0.0)
    s2 = sweep_delta2(spec, cal, detunings=grid, phase_map=phase_map_400,
                      use_simulation=False)
    phases = phi0 + np.array([phase_map_400.phase_of(d) for d in grid])
    errs = [
        np.max(np.abs(s2.curves["II"] - (b_ii + b_zi))),
        np.max(np.abs(s2.curves["XX"] - (b_ii + b_iz * np.sin(phases)))),
        np.max(np.abs(s2.curves["YY"] - (b_ii - b_iz * np.cos(phases)))),
    ]

    phip0 = -0.8111
    cal1 = replace(map_cal, phi=0.0, phi_prime=phip0, delta1=0.0, delta2=0.0)
    s1 = sweep_delta1(spec, cal1, detunings=grid, phase_map=phase_map_400,
                      use_simulation=False)
    phases1 = phip0 + np.array([phase_map_400.phase_of(d) for d in grid])
    errs += [
        np.max(np.abs(s1.curves["II"] - (b_ii + b_zz))),
        np.max(np.abs(s1.curves["XX"] - (b_ii - b_zz * np.cos(phases1)))),
        np.max(np.abs(s1.curves["YY"] - (b_ii + b_zz * np.cos(phases1)))),
    ]

    # extrema of the conditional-phase sweep with the shipped coefficients
    cal_ext = replace(map_cal, phi=0.0, phi_prime=0.0, delta1=0.0, delta2=0.0)
    s_ext = sweep_delta1(spec, cal_ext, detunings=np.array([0.0]),
                         phase_map=phase_map_400, use_simulation=False)
    xx0, yy0 = s_ext.curves["XX"][0], s_ext.curves["YY"][0]
    elapsed = time.perf_counter() - t0
    ok = max(errs) < 1e-6 and abs(xx0 - 2.28) < 1e-9 and abs(yy0 - 3.16) < 1e-9 \
        and elapsed < 60.0
    report(9, "calibration-sweep formulas", elapsed, 60, ok,
           f"max curve deviation {max(errs):.2e}, extrema {xx0:.2f}/{yy0:.2f}")
    assert max(errs) < 1e-6
    assert abs(xx0 - 2.28) < 1e-9
    assert abs(yy0 - 3.16) < 1e-9
    assert elapsed < 60.0


def test_criterion_10_deutsch_jozsa(spec, map_cal):
    from mapgate.dj import ideal_dj_output, run_dj
    from mapgate.linalg import partial_trace

    t0 = time.perf_counter()
    kinds = ["constant", "constant", "balanced", "balanced"]
    ideal_cnot = unitary_channel(canonical_cnot())
    for i in range(4):
        rho, cls = run_dj(i, ideal_cnot)
        assert cls == kinds[i]
        query = partial_trace(rho, [0]).data
        prob = query[1, 1].real if cls == "balanced" else query[0, 0].real
        assert prob >= 1 - 1e-9

    noisy_cnot = compose_cnot(spec, map_cal, with_noise=True)
    fids = {}
    all_correct = True
    for i in range(4):
        rho, cls = run_dj(i, noisy_cnot)
        all_correct &= cls == kinds[i]
        fids[i] = state_fidelity(ideal_dj_output(i), rho)
    contrast_ordered = max(fids[2], fids[3]) < min(fids[0], fids[1])
    elapsed = time.perf_counter() - t0
    ok = all_correct and contrast_ordered and elapsed < 120.0
    report(10, "Deutsch-Jozsa", elapsed, 120, ok,
           "ideal all-correct; decoherent fidelities "
           + ", ".join(f"f{i}={fids[i]:.4f}" for i in range(4)))
    assert all_correct
    assert contrast_ordered
    assert elapsed < 120.0


def test_criterion_11_physicality_suite(rng):
    t0 = time.perf_counter()
    model = ReadoutModel()
    n_states, n_channels = 800, 200

    worst_state_eig = 0.0
    for _ in range(n_states):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho = DensityMatrix((2, 2), rho / np.trace(rho), validate=False)
        rec = run_qst(rho, None, ReadoutModel(shot_count=200), rng=rng)
        rho_hat = reconstruct_state_mle(rec, model)
        assert abs(np.trace(rho_hat.data) - 1.0) < 1e-10
        assert np.max(np.abs(rho_hat.data - rho_hat.data.conj().T)) < 1e-12
        worst_state_eig = min(worst_state_eig, float(np.linalg.eigvalsh(rho_hat.data).min()))
        assert worst_state_eig >= -1e-9

    worst_tp = 0.0
    worst_cp = 0.0
    for _ in range(n_channels):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, r = np.linalg.qr(a)
        u = q * (np.diag(r) / np.abs(np.diag(r)))
        p = rng.uniform(0.0, 0.5)
        r_ch = depolarizing_ptm(p).r @ ptm_of_unitary(u).r
        from mapgate.gates import GateChannel

        ch = GateChannel(kind="superoperator", duration=0.0, r=r_ch, validate=False)
        rec = run_qpt(ch, ReadoutModel(shot_count=500), rng=rng)
        r_hat = reconstruct_ptm_mle(rec, model)
        worst_tp = max(worst_tp, r_hat.tp_residual())
        worst_cp = min(worst_cp, r_hat.cp_min_eigenvalue())
        assert worst_tp < 1e-6
        assert worst_cp >= -1e-6

    elapsed = time.perf_counter() - t0
    ok = elapsed < 1800.0
    report(11, "physicality property suite", elapsed, 1800, ok,
           f"{n_states} states (min eig {worst_state_eig:.1e}) + "
           f"{n_channels} channels (TP {worst_tp:.1e}, CP {worst_cp:.1e})")
    assert elapsed < 1800.0
