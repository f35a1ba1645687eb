"""Calibration workflows for the conditional gate.

Mirrors the experimental procedure end to end: Stark-tone Ramsey fringes
measure the control-dependent shifts (delta_eps, delta_eps'), their beat
fixes the gate time t_g, a detuning sweep on (|00>+|01>)/sqrt(2) picks the
Z2 compensation, a second sweep on (|00>+|10>)/sqrt(2) picks Z1, and a
final state reconstruction verifies the phase cancellation.

The Stark working point itself (amplitude and frequency) is tuned
numerically: the amplitude sets the fringe beat |delta_eps - delta_eps'|
and the frequency closes the control-0 Ramsey phase at t_g so the gate's
unconditional block is flip-free.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .constants import GHZ, MHZ, TWO_PI
from .device import DeviceSpec, _min_gap_continuous, build_hamiltonian, dressed_frame
from .errors import DegenerateFrequencies, FitFailed
from .gates import (
    GateChannel,
    MapCalibration,
    ZPhaseMap,
    calibrate_z_phase_map,
    simulate_map_gate,
    stark_segment_unitary,
    z_phase_gate,
)
from .linalg import DensityMatrix, ry, rx, state_fidelity
from .pulse import NoiseSpec, StarkTone, frame_phases

__all__ = [
    "RamseyTrace",
    "PhaseSweep",
    "stark_ramsey",
    "find_tg",
    "tune_stark_tone",
    "build_map_calibration",
    "sweep_delta2",
    "sweep_delta1",
    "verify_cancellation",
]


# Edge length used when the tuned tone is replayed for Ramsey acquisition.
# Shorter edges alias the branch dressing into the fringe fit; longer ones
# defer the observed out-of-phase point beyond the 1/(2 df) cross-check band.
RAMSEY_ACQUISITION_RISE_NS = 60.0


@dataclass(frozen=True)
class RamseyTrace:
    """A simulated Stark-tone Ramsey fringe and its damped-sinusoid fit."""

    delays: np.ndarray            # ns
    values: np.ndarray            # population of the bright state
    control_state: int            # 0 | 1, state of Q1
    fitted_freq: float            # MHz
    fitted_decay: float           # us (inf for noiseless traces)
    fit_residual_rms: float = 0.0


@dataclass(frozen=True)
class PhaseSweep:
    """Readout curves versus Z-gate detuning for the three probe pre-pulses."""

    detunings: np.ndarray                     # MHz
    curves: dict[str, np.ndarray]             # label -> <M> values
    optimum: float                            # MHz
    target: str                               # "phi" | "phi_prime"


# ---------------------------------------------------------------------------
# Stark-tone Ramsey
# ---------------------------------------------------------------------------

def _stark_quasi_energies(spec: DeviceSpec, flux_offset: float, tone: StarkTone):
    """Quasi-energies of the driven system in the common frame at the tone
    frequency, labeled by the static dressed computational states."""
    lv = spec.levels_per_transmon
    w1_op = spec.q1_w01 + flux_offset * 1e-3
    h = build_hamiltonian(spec, w1_op).data.copy()
    f_diag = frame_phases((lv, lv), (tone.frequency, tone.frequency))
    a = np.diag(np.sqrt(np.arange(1, lv)), 1).astype(complex)
    drive = tone.amplitude / 2.0 * (np.kron(np.eye(lv), a) + np.kron(np.eye(lv), a.conj().T))
    hb = h - np.diag(f_diag) + drive
    evals, evecs = np.linalg.eigh(hb)
    _, static_vecs, labels = dressed_frame(spec, w1_op)
    q = {}
    for name, bare in {"00": 0, "01": 1, "10": lv, "11": lv + 1}.items():
        vec = static_vecs[:, labels[bare]]
        overlap = np.abs(evecs.conj().T @ vec) ** 2
        q[name] = float(evals[np.argmax(overlap)])
    return q


def _fringe_rates(spec: DeviceSpec, flux_offset: float, tone: StarkTone):
    """Signed Ramsey fringe rates (rad/ns) for control state 0 and 1,
    in the per-transmon frame at the bare 0-1 frequencies."""
    q = _stark_quasi_energies(spec, flux_offset, tone)
    w2 = spec.q2_w01 * GHZ
    fs = tone.frequency * GHZ
    nu0 = (w2 - fs) - (q["01"] - q["00"])
    nu1 = (w2 - fs) - (q["11"] - q["10"])
    return nu0, nu1


def stark_ramsey(
    spec: DeviceSpec,
    stark: StarkTone,
    control_state: int,
    delays: Sequence[float],
    noise: NoiseSpec | None = None,
    flux_offset: float | None = None,
    dt: float = 0.2,
) -> RamseyTrace:
    """Simulate (pi/2 on Q2) - Stark tone for each delay - (-pi/2 on Q2).

    Q1 is prepared in ``control_state``; the returned values are the
    populations of the bright state (|00> or |10>), whose fringe frequency
    is the control-dependent Stark shift.
    """
    delays = np.asarray(list(delays), dtype=float)
    if delays.size == 0 or np.any(np.diff(delays) <= 0):
        raise FitFailed("delays must be nonempty and increasing")
    if flux_offset is None:
        flux_offset, _ = _min_gap_continuous(spec)
    lv = spec.levels_per_transmon
    w1_op = spec.q1_w01 + flux_offset * 1e-3

    from .gates import _ry_on_q2

    pre = _ry_on_q2(np.pi / 2, lv)
    post = _ry_on_q2(-np.pi / 2, lv)

    # The tone body is static in its common frame: one eigendecomposition
    # gives the propagator at every delay. The cosine ramps are prepended
    # and appended by short stepped evolutions.
    tr = stark.rise_fall
    h_lab = build_hamiltonian(spec, w1_op)
    f_diag = frame_phases((lv, lv), (stark.frequency, stark.frequency))
    a = np.diag(np.sqrt(np.arange(1, lv)), 1).astype(complex)
    drive_op = np.kron(np.eye(lv), a + a.conj().T)
    h_body = h_lab.data - np.diag(f_diag) + stark.amplitude / 2.0 * drive_op
    evals_b, vecs_b = np.linalg.eigh(h_body)

    from .pulse import _ramp_shape

    def ramp_u(up: bool, span: float):
        if span <= 0:
            return np.eye(lv * lv, dtype=complex)
        n = max(1, int(round(span / dt)))
        step = span / n
        u = np.eye(lv * lv, dtype=complex)
        for k in range(n):
            t_mid = (k + 0.5) * step
            x = t_mid / span if up else 1 - t_mid / span
            amp = stark.amplitude * _ramp_shape(x, stark.ramp)
            hm = h_lab.data - np.diag(f_diag) + amp / 2.0 * drive_op
            ev, vv = np.linalg.eigh(hm)
            u = (vv * np.exp(-1j * ev * step)) @ vv.conj().T @ u
        return u

    u_up = ramp_u(True, tr)
    u_dn = ramp_u(False, tr)

    bright = 0 if control_state == 0 else lv  # |00> or |10>
    psi0 = np.zeros(lv * lv, dtype=complex)
    psi0[bright] = 1.0
    psi_in = pre @ psi0

    d_frame = frame_phases((lv, lv), (w1_op, spec.q2_w01)) - f_diag
    values = np.empty_like(delays)
    if noise is None:
        for i, tau in enumerate(delays):
            body = max(0.0, tau - 2 * tr)
            if tau < 2 * tr:
                u_f = ramp_u(True, tau / 2) if tau > 0 else np.eye(lv * lv, dtype=complex)
                u_tone = ramp_u(False, tau / 2) @ u_f
            else:
                u_body = (vecs_b * np.exp(-1j * evals_b * body)) @ vecs_b.conj().T
                u_tone = u_dn @ u_body @ u_up
            u_canonical = np.exp(1j * d_frame * tau)[:, None] * u_tone
            psi = post @ (u_canonical @ psi_in)
            values[i] = np.abs(psi[bright]) ** 2
    else:
        from .gates import _superop_of_evolution, _superop_frame_change
        from .pulse import Drive, stark_envelope

        for i, tau in enumerate(delays):
            tone_tau = replace(stark, duration=tau)
            drv = Drive(1, lambda t, tn=tone_tau: stark_envelope(tn, t), stark.frequency)
            n = max(1, int(round(tau / dt)))
            s = _superop_of_evolution(
                h_lab, [drv], noise, tau, tau / n, (stark.frequency, stark.frequency)
            )
            s = _superop_frame_change(
                s, (lv, lv), (stark.frequency, stark.frequency), (w1_op, spec.q2_w01), tau
            )
            rho_in = np.outer(psi_in, psi_in.conj())
            rho = (s @ rho_in.reshape(-1, order="F")).reshape(lv * lv, lv * lv, order="F")
            rho = post @ rho @ post.conj().T
            values[i] = np.real(rho[bright, bright])

    freq, decay, resid = _fit_damped_sinusoid(delays, values)
    return RamseyTrace(
        delays=delays,
        values=values,
        control_state=control_state,
        fitted_freq=freq,
        fitted_decay=decay,
        fit_residual_rms=resid,
    )


def _fit_damped_sinusoid(t: np.ndarray, y: np.ndarray):
    """Fit y = a*cos(2 pi f t + phase)*exp(-t/tau) + c; returns (f MHz, tau us, rms)."""
    y0 = y - np.mean(y)
    dt_s = np.median(np.diff(t))
    spectrum = np.abs(np.fft.rfft(y0 * np.hanning(len(y0))))
    freqs = np.fft.rfftfreq(len(y0), dt_s)  # cycles/ns
    k = int(np.argmax(spectrum[1:])) + 1
    f0 = freqs[k]
    amp0 = float(np.max(np.abs(y0))) or 1e-6

    def model(p, tt):
        a, f, ph, tau_inv, c = p
        return a * np.cos(TWO_PI * f * tt + ph) * np.exp(-tt * tau_inv) + c

    def resid_fn(p):
        return model(p, t) - y

    best = None
    for ph0 in (0.0, np.pi / 2, np.pi, -np.pi / 2):
        try:
            res = least_squares(
                resid_fn,
                x0=[amp0, f0, ph0, 1e-7, float(np.mean(y))],
                bounds=([0, 0, -2 * np.pi, 0, -np.inf], [np.inf, 0.5 / dt_s, 2 * np.pi, 1.0, np.inf]),
                max_nfev=2000,
            )
            if best is None or res.cost < best.cost:
                best = res
        except Exception:
            continue
    if best is None:
        raise FitFailed("damped sinusoid fit failed")
    a, f, ph, tau_inv, c = best.x
    rms = float(np.sqrt(np.mean(best.fun**2)))
    if a > 1e-4 and rms > 0.05 * a:
        raise FitFailed(f"fit residual {rms:.3g} exceeds 5% of amplitude {a:.3g}")
    tau_us = float(np.inf) if tau_inv < 1e-9 else 1.0 / tau_inv / 1000.0
    return float(f * 1e3), tau_us, rms  # MHz, us, rms


def find_tg(trace0: RamseyTrace, trace1: RamseyTrace) -> float:
    """Half-beat time 1/(2 |f0 - f1|) of the two fringes, in ns.

    Cross-checked against the delay where the traces are most anti-correlated
    (their summed deviation from the common mean is smallest); the two
    estimates must agree within 5%.
    """
    df = abs(trace0.fitted_freq - trace1.fitted_freq)  # MHz
    if df < 0.01:
        raise DegenerateFrequencies(
            f"fringe frequencies {trace0.fitted_freq:.4f} and "
            f"{trace1.fitted_freq:.4f} MHz differ by less than 0.01 MHz"
        )
    t_g = 1.0 / (2.0 * df * 1e-3)  # ns
    common = np.intersect1d(trace0.delays, trace1.delays)
    if common.size >= 8:
        i0 = np.searchsorted(trace0.delays, common)
        i1 = np.searchsorted(trace1.delays, common)
        v0 = trace0.values[i0] - np.mean(trace0.values)
        v1 = trace1.values[i1] - np.mean(trace1.values)
        anti = v0 * v1  # most negative where out of phase
        # average out the sum-frequency component of the product so the
        # minimum tracks the slow beat only
        step = float(np.median(np.diff(common)))
        f_mean = 0.5 * (trace0.fitted_freq + trace1.fitted_freq) * 1e-3  # 1/ns
        if f_mean > 0:
            klen = max(1, int(round(1.0 / (f_mean * step))))
            kernel = np.ones(klen) / klen
            anti = np.convolve(anti, kernel, mode="same")
        window = (common >= 0.25 * t_g) & (common <= 1.5 * t_g)
        if np.any(window):
            t_anti = float(common[window][np.argmin(anti[window])])
            if t_anti > 0 and abs(t_anti - t_g) > 0.05 * t_g + step:
                raise FitFailed(
                    f"anti-correlation time {t_anti:.0f} ns disagrees with "
                    f"1/(2 df) = {t_g:.0f} ns"
                )
    return float(t_g)


# ---------------------------------------------------------------------------
# Stark working-point tuner
# ---------------------------------------------------------------------------

def tune_stark_tone(
    spec: DeviceSpec,
    target_beat_mhz: float = 0.467,
    start_frequency: float | None = None,
    flux_offset: float | None = None,
    rise_fall: float = 100.0,
    polish: bool = True,
) -> tuple[StarkTone, float, dict]:
    """Find (amplitude, frequency) so the fringe beat equals the target and
    the control-0 fringe phase closes at t_g (flip-free unconditional block).

    The amplitude is bisected against the quasi-energy beat; the frequency
    is then polished against the simulated gate so the closure includes the
    ramp contributions. Long cosine ramps keep the branch dressing adiabatic
    (short edges produce strong Stueckelberg leakage oscillations).
    Returns (tone with duration = t_g, flux offset, tuning info).
    """
    from scipy.optimize import brentq

    from .gates import simulate_map_gate

    if flux_offset is None:
        flux_offset, _ = _min_gap_continuous(spec)
    w1_op = spec.q1_w01 + flux_offset * 1e-3
    evals, _, labels = dressed_frame(spec, w1_op)
    lv = spec.levels_per_transmon
    eps_dressed = (evals[labels[2]] - evals[labels[1]]) / GHZ  # |01> -> |02>, GHz
    fs = start_frequency if start_frequency is not None else eps_dressed - 18.5e-3
    target = target_beat_mhz  # MHz

    def beat_of(fs_ghz: float, amp: float) -> float:
        nu0, nu1 = _fringe_rates(
            spec, flux_offset, StarkTone(frequency=fs_ghz, amplitude=amp)
        )
        return (nu0 - nu1) / MHZ

    def solve_amplitude(fs_ghz: float) -> float:
        lo, hi = 0.5 * MHZ, 6.0 * MHZ
        b_lo = abs(beat_of(fs_ghz, lo)) - target
        b_hi = abs(beat_of(fs_ghz, hi)) - target
        while b_lo * b_hi > 0 and hi < 16.0 * MHZ:
            hi *= 1.3
            b_hi = abs(beat_of(fs_ghz, hi)) - target
        if b_lo * b_hi > 0:
            raise FitFailed(
                f"fringe beat target {target} MHz unreachable at {fs_ghz:.4f} GHz"
            )
        return brentq(lambda a: abs(beat_of(fs_ghz, a)) - target, lo, hi, xtol=1e-9)

    def tone_at(fs_ghz: float) -> tuple[StarkTone, float, float]:
        amp = solve_amplitude(fs_ghz)
        nu0, nu1 = _fringe_rates(
            spec, flux_offset, StarkTone(frequency=fs_ghz, amplitude=amp)
        )
        t_g = np.pi / abs(nu0 - nu1)
        return (
            StarkTone(frequency=fs_ghz, amplitude=amp, duration=float(t_g), rise_fall=rise_fall),
            nu0,
            nu1,
        )

    def gate_phase_wrap(tone: StarkTone, nu0: float, nu1: float) -> float:
        """Residual control-0 phase of the simulated gate at t_g."""
        cal = MapCalibration(
            t_g=tone.duration, stark=tone,
            delta_eps=nu0 / MHZ, delta_eps_prime=nu1 / MHZ,
            flux_offset=flux_offset,
        )
        ch = simulate_map_gate(spec, cal)
        k = ch.block
        return float(2.0 * np.arctan(np.imag(k[1, 0] / k[0, 0])))

    tone, nu0, nu1 = tone_at(fs)
    theta = gate_phase_wrap(tone, nu0, nu1) if polish else 0.0
    if polish and abs(theta) > 2e-4:
        f_prev, t_prev = fs, theta
        fs = fs - np.sign(theta) * 0.05e-3
        for _ in range(10):
            tone, nu0, nu1 = tone_at(fs)
            theta = gate_phase_wrap(tone, nu0, nu1)
            if abs(theta) < 2e-4:
                break
            slope = (theta - t_prev) / (fs - f_prev)
            f_prev, t_prev = fs, theta
            fs = fs - theta / slope
    info = {
        "beat_mhz": (nu0 - nu1) / MHZ,
        "t_g_ns": tone.duration,
        "delta_eps_mhz": nu0 / MHZ,
        "delta_eps_prime_mhz": nu1 / MHZ,
        "residual_phase_rad": float(theta),
    }
    return tone, float(flux_offset), info


def build_map_calibration(
    spec: DeviceSpec,
    target_beat_mhz: float = 0.467,
    z_length: float = 400.0,
    phase_map: ZPhaseMap | None = None,
    delta_grid: np.ndarray | None = None,
    model=None,
) -> MapCalibration:
    """End-to-end calibration: tune the tone, extract the gate phases, and
    run both compensation sweeps."""
    from .tomography import ReadoutModel

    if model is None:
        model = ReadoutModel()
    if phase_map is None:
        phase_map = calibrate_z_phase_map(z_length)
    tone, flux_offset, info = tune_stark_tone(spec, target_beat_mhz)
    cal = MapCalibration(
        t_g=info["t_g_ns"],
        stark=tone,
        delta_eps=info["delta_eps_mhz"],
        delta_eps_prime=info["delta_eps_prime_mhz"],
        z_length=z_length,
        flux_offset=flux_offset,
    )
    sweep2 = sweep_delta2(spec, cal, phase_map=phase_map, model=model, detunings=delta_grid)
    cal = replace(cal, delta2=sweep2.optimum)
    sweep1 = sweep_delta1(spec, cal, phase_map=phase_map, model=model, detunings=delta_grid)
    cal = replace(cal, delta1=sweep1.optimum)
    from .gates import map_phases_from_channel

    ch = simulate_map_gate(spec, cal)
    phi, phi_prime = map_phases_from_channel(ch)
    return replace(cal, phi=phi, phi_prime=phi_prime)


# ---------------------------------------------------------------------------
# Compensation sweeps
# ---------------------------------------------------------------------------

_PROBE_LABELS = ("II", "XX", "YY")


def _probe_unitaries() -> dict[str, np.ndarray]:
    return {
        "II": np.eye(4, dtype=complex),
        "XX": np.kron(rx(np.pi / 2), rx(np.pi / 2)),
        "YY": np.kron(ry(np.pi / 2), ry(np.pi / 2)),
    }


def _parabola_refine(x: np.ndarray, y: np.ndarray, idx: int) -> float:
    """Vertex of the parabola through the extremum sample and its neighbours."""
    if idx == 0 or idx == len(x) - 1:
        return float(x[idx])
    x0, x1, x2 = x[idx - 1], x[idx], x[idx + 1]
    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    denom = (y0 - 2 * y1 + y2)
    if abs(denom) < 1e-15:
        return float(x1)
    return float(x1 + 0.5 * (y0 - y2) / denom * (x1 - x0))


def _sweep_curves(
    spec: DeviceSpec,
    cal: MapCalibration,
    prep: np.ndarray,
    z_target: int,
    detunings: np.ndarray,
    phase_map: ZPhaseMap,
    model,
    noise: NoiseSpec | None,
    use_simulation: bool,
    rng: np.random.Generator | None,
    fixed_other: float | None = None,
):
    """Readout values of the three probe pre-pulses over the detuning grid."""
    from .tomography import readout_expectation

    probes = _probe_unitaries()
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    rho_prep = prep @ rho00 @ prep.conj().T

    if use_simulation:
        map_ch = simulate_map_gate(spec, cal, with_noise=noise is not None)
        rho_after_map = map_ch.apply(rho_prep)
    else:
        from .gates import ideal_map_unitary

        u_map = ideal_map_unitary(cal.phi, cal.phi_prime).data
        rho_after_map = u_map @ rho_prep @ u_map.conj().T

    curves = {lbl: np.empty_like(detunings) for lbl in _PROBE_LABELS}
    for i, det in enumerate(detunings):
        if z_target == 2:
            d1, d2 = fixed_other, det
        else:
            d1, d2 = det, fixed_other
        rho = rho_after_map
        for q, d in ((1, d1), (2, d2)):
            if d is None:
                continue
            if use_simulation:
                zch = z_phase_gate(
                    q, d, cal.z_length, simulate=True, spec=spec,
                    noise=noise, phase_map=phase_map,
                )
                rho = zch.apply(rho)
            else:
                zch = z_phase_gate(q, d, cal.z_length, phase_map=phase_map)
                rho = zch.apply(rho)
        for lbl in _PROBE_LABELS:
            p = probes[lbl]
            rho_m = p @ rho @ p.conj().T
            curves[lbl][i] = readout_expectation(
                DensityMatrix((2, 2), rho_m, validate=False), model, rng=rng
            )
    return curves


def sweep_delta2(
    spec: DeviceSpec,
    cal: MapCalibration,
    detunings: np.ndarray | None = None,
    noise: NoiseSpec | None = None,
    model=None,
    phase_map: ZPhaseMap | None = None,
    use_simulation: bool = True,
    rng: np.random.Generator | None = None,
) -> PhaseSweep:
    """Z2 compensation sweep on (|00>+|01>)/sqrt(2) after the gate.

    The optimum is the detuning minimising the Y(pi/2)xY(pi/2) probe curve,
    which sits at total phase zero.
    """
    from .tomography import ReadoutModel

    if model is None:
        model = ReadoutModel()
    if phase_map is None:
        phase_map = calibrate_z_phase_map(cal.z_length)
    if detunings is None:
        detunings = np.linspace(-6.0, 6.0, 49)
    detunings = np.asarray(detunings, dtype=float)
    prep = np.kron(np.eye(2, dtype=complex), ry(np.pi / 2))
    curves = _sweep_curves(
        spec, cal, prep, z_target=2, detunings=detunings, phase_map=phase_map,
        model=model, noise=noise, use_simulation=use_simulation, rng=rng,
        fixed_other=None,
    )
    idx = int(np.argmin(curves["YY"]))
    return PhaseSweep(
        detunings=detunings,
        curves=curves,
        optimum=_parabola_refine(detunings, curves["YY"], idx),
        target="phi",
    )


def sweep_delta1(
    spec: DeviceSpec,
    cal: MapCalibration,
    detunings: np.ndarray | None = None,
    noise: NoiseSpec | None = None,
    model=None,
    phase_map: ZPhaseMap | None = None,
    use_simulation: bool = True,
    rng: np.random.Generator | None = None,
) -> PhaseSweep:
    """Z1 compensation sweep on (|00>+|10>)/sqrt(2) with Z2 already fixed.

    The optimum is the detuning maximising the Y(pi/2)xY(pi/2) probe curve
    (total conditional phase zero).
    """
    from .tomography import ReadoutModel

    if model is None:
        model = ReadoutModel()
    if phase_map is None:
        phase_map = calibrate_z_phase_map(cal.z_length)
    if detunings is None:
        detunings = np.linspace(-6.0, 6.0, 49)
    detunings = np.asarray(detunings, dtype=float)
    prep = np.kron(ry(np.pi / 2), np.eye(2, dtype=complex))
    curves = _sweep_curves(
        spec, cal, prep, z_target=1, detunings=detunings, phase_map=phase_map,
        model=model, noise=noise, use_simulation=use_simulation, rng=rng,
        fixed_other=cal.delta2,
    )
    idx = int(np.argmax(curves["YY"]))
    return PhaseSweep(
        detunings=detunings,
        curves=curves,
        optimum=_parabola_refine(detunings, -curves["YY"], idx),
        target="phi_prime",
    )


def verify_cancellation(
    spec: DeviceSpec,
    cal: MapCalibration,
    noise: NoiseSpec | None = None,
    model=None,
    use_simulation: bool = True,
    shots: int = 0,
    rng: np.random.Generator | None = None,
) -> tuple[DensityMatrix, float]:
    """Apply the composed gate to (|01>+|11>)/sqrt(2), reconstruct the output
    by state tomography, and return fidelity to (|01>+|10>)/sqrt(2)."""
    from dataclasses import replace as dc_replace

    from .gates import compose_cnot
    from .tomography import ReadoutModel, reconstruct_state_mle, run_qst

    if model is None:
        model = ReadoutModel()
    model = dc_replace(model, shot_count=shots)
    prep = np.kron(ry(np.pi / 2), rx(np.pi))
    cnot = compose_cnot(
        spec, cal, with_noise=noise is not None, ideal_phases=not use_simulation
    )

    def prepare():
        rho00 = np.zeros((4, 4), dtype=complex)
        rho00[0, 0] = 1.0
        return DensityMatrix((2, 2), prep @ rho00 @ prep.conj().T, validate=False)

    record = run_qst(prepare, cnot, model, rng=rng)
    rho_rec = reconstruct_state_mle(record, model)
    target_vec = np.zeros(4, dtype=complex)
    target_vec[1] = 1 / np.sqrt(2)
    target_vec[2] = 1 / np.sqrt(2)
    target = DensityMatrix((2, 2), np.outer(target_vec, target_vec.conj()))
    return rho_rec, state_fidelity(target, rho_rec)
