"""Gate construction: the microwave-activated conditional gate, sech-pulse
Z-phase gates, and the composed cNOT.

The conditional gate is the Ramsey-style sequence (pi/2 on Q2) - Stark tone
for t_g - (-pi/2 on Q2): the Stark tone imprints control-dependent phases on
Q2's superposition and the sandwich converts the half-cycle phase difference
into a conditional flip. Simulated gates are extracted as channels on the
four dressed computational states; population left outside that subspace is
reported per input basis state and, for trace bookkeeping, routed to the
maximally mixed state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .constants import GHZ, MHZ, SECH_PHASE_SIGN, TOL
from .device import DeviceSpec, _min_gap_continuous, _pair_gap, dressed_frame, build_hamiltonian
from .errors import DimensionMismatch, InvalidSpec, UnalignedDevice
from .linalg import Operator, ry
from .pulse import (
    Drive,
    NoiseSpec,
    SechPulse,
    StarkTone,
    collapse_operators,
    frame_change,
    lindblad_generator,
    sech_envelope,
    stark_envelope,
)
from .ptm import (
    PauliTransferMatrix,
    apply_ptm,
    kron_superop,
    ptm_of_superop,
    ptm_of_unitary,
    ptm_to_choi,
)

__all__ = [
    "MapCalibration",
    "GateChannel",
    "ZPhaseMap",
    "calibrate_z_phase_map",
    "ideal_map_unitary",
    "simulate_map_gate",
    "z_phase_gate",
    "compose_cnot",
    "canonical_cnot",
    "identity_channel",
    "unitary_channel",
    "map_phases_from_channel",
]


def canonical_cnot() -> np.ndarray:
    """cNOT with Q1 as control in the |00>,|01>,|10>,|11> basis."""
    return np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )


def ideal_map_unitary(phi: float, phi_prime: float) -> Operator:
    """Conditional-flip unitary with the accumulated single-state phases.

    |00> -> |00>, |01> -> e^{i phi}|01>, |10> -> e^{i phi'}|11>,
    |11> -> e^{i(phi+phi')}|10>. With phi = phi' = 0 this is the cNOT.
    """
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[1, 1] = np.exp(1j * phi)
    u[3, 2] = np.exp(1j * phi_prime)
    u[2, 3] = np.exp(1j * (phi + phi_prime))
    return Operator((2, 2), u)


# ---------------------------------------------------------------------------
# Gate channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateChannel:
    """A two-qubit gate as a unitary or a Pauli-transfer superoperator."""

    kind: str                      # "unitary" | "superoperator"
    duration: float                # ns
    u: np.ndarray | None = None    # 4x4, unitary kind
    r: np.ndarray | None = None    # 16x16 transfer matrix, superoperator kind
    leakage: np.ndarray | None = None      # per input basis state
    block: np.ndarray | None = field(default=None, compare=False)  # raw 4x4
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.kind == "unitary":
            if self.u is None:
                raise DimensionMismatch("unitary channel needs u")
            u = np.asarray(self.u, dtype=complex)
            object.__setattr__(self, "u", u)
            if self.validate:
                dev = float(np.max(np.abs(u.conj().T @ u - np.eye(4))))
                if dev > 1e-8:
                    raise DimensionMismatch(f"gate unitary off by {dev:.2e}")
        elif self.kind == "superoperator":
            if self.r is None:
                raise DimensionMismatch("superoperator channel needs r")
            r = np.asarray(self.r, dtype=float)
            object.__setattr__(self, "r", r)
            if self.validate:
                tp = PauliTransferMatrix(r).tp_residual()
                if tp > TOL.ptm_tp:
                    raise DimensionMismatch(f"channel trace preservation off by {tp:.2e}")
                cp = float(np.linalg.eigvalsh(ptm_to_choi(r)).min())
                if cp < TOL.ptm_cp:
                    raise DimensionMismatch(f"channel Choi eigenvalue {cp:.2e}")
        else:
            raise DimensionMismatch(f"unknown channel kind {self.kind!r}")

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise DimensionMismatch(f"need a 4x4 state, got {rho.shape}")
        if self.kind == "unitary":
            return self.u @ rho @ self.u.conj().T
        return apply_ptm(self.r, rho)

    def ptm(self) -> PauliTransferMatrix:
        if self.kind == "unitary":
            return ptm_of_unitary(self.u)
        return PauliTransferMatrix(self.r)

    def then(self, other: "GateChannel") -> "GateChannel":
        """Sequential composition: self first, then other."""
        if self.kind == "unitary" and other.kind == "unitary":
            return GateChannel(
                kind="unitary", duration=self.duration + other.duration,
                u=other.u @ self.u,
            )
        r = other.ptm().r @ self.ptm().r
        leak = None
        if self.leakage is not None or other.leakage is not None:
            a = self.leakage if self.leakage is not None else np.zeros(4)
            b = other.leakage if other.leakage is not None else np.zeros(4)
            leak = 1.0 - (1.0 - a) * (1.0 - np.mean(b))
        return GateChannel(
            kind="superoperator", duration=self.duration + other.duration,
            r=r, leakage=leak, validate=False,
        )

    def to_json_dict(self) -> dict:
        out = {"kind": self.kind, "duration_ns": self.duration}
        if self.kind == "unitary":
            out["matrix_real"] = np.real(self.u).tolist()
            out["matrix_imag"] = np.imag(self.u).tolist()
        else:
            out["ptm"] = self.r.tolist()
        if self.leakage is not None:
            out["leakage"] = np.asarray(self.leakage).tolist()
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "GateChannel":
        leak = np.asarray(d["leakage"]) if "leakage" in d else None
        if d["kind"] == "unitary":
            u = np.asarray(d["matrix_real"]) + 1j * np.asarray(d["matrix_imag"])
            return cls(kind="unitary", duration=d["duration_ns"], u=u, leakage=leak)
        return cls(
            kind="superoperator", duration=d["duration_ns"],
            r=np.asarray(d["ptm"]), leakage=leak, validate=False,
        )


def identity_channel(duration: float = 0.0) -> GateChannel:
    return GateChannel(kind="unitary", duration=duration, u=np.eye(4, dtype=complex))


def unitary_channel(u: np.ndarray, duration: float = 0.0) -> GateChannel:
    return GateChannel(kind="unitary", duration=duration, u=np.asarray(u, dtype=complex))


# ---------------------------------------------------------------------------
# Z-phase gate and its calibrated phase map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZPhaseMap:
    """Numerically calibrated phase-vs-detuning law for one pulse length.

    The fitted law is phase = sign * 4 * arctan(detuning / rho_eff); the
    analytic bandwidth pi/(2 sigma) is kept alongside for comparison.
    """

    pulse_length: float           # ns
    detunings: np.ndarray         # MHz grid used for calibration
    phases: np.ndarray            # simulated phases, rad (unwrapped)
    rho_eff: float                # rad/ns, fitted
    rho_analytic: float           # rad/ns, pi/(2 sigma)
    sign: float = SECH_PHASE_SIGN
    max_residual: float = 0.0

    def phase_of(self, detuning_mhz: float) -> float:
        return self.sign * 4.0 * np.arctan(detuning_mhz * MHZ / self.rho_eff)

    def detuning_for(self, phase: float) -> float:
        """Inverse map; phase must lie in (-pi, pi)."""
        phase = (phase + np.pi) % (2 * np.pi) - np.pi
        return self.rho_eff * np.tan(self.sign * phase / 4.0) / MHZ


def _two_level_sech_unitary(detuning_mhz: float, pulse_length: float, dt: float) -> np.ndarray:
    """Two-level propagator of the cyclic sech pulse, in the qubit frame."""
    from .pulse import evolve_unitary  # local import to keep module load light

    w01 = 5.0  # nominal GHz; the two-level problem depends only on the detuning
    h = Operator((2,), np.diag([0.0, w01 * GHZ]))
    p = SechPulse.from_length(pulse_length, carrier_detuning=detuning_mhz)
    drv = Drive(0, lambda t: sech_envelope(p, t), w01 + detuning_mhz * 1e-3)
    n = int(round(pulse_length / dt))
    return evolve_unitary(h, [drv], pulse_length, pulse_length / n, frame_ghz=(w01,)).data


def calibrate_z_phase_map(
    pulse_length: float = 400.0,
    detunings_mhz: np.ndarray | None = None,
    dt: float = 0.25,
) -> ZPhaseMap:
    """Build the phase map by simulating the two-level gate over a grid.

    The closed-form law with rho = pi/(2 sigma) is used as the fit model;
    only the effective bandwidth is fitted.
    """
    if detunings_mhz is None:
        detunings_mhz = np.linspace(-5.0, 5.0, 21)
    detunings_mhz = np.asarray(detunings_mhz, dtype=float)
    phases = np.empty_like(detunings_mhz)
    order = np.argsort(detunings_mhz)
    raw = np.empty_like(detunings_mhz)
    for i in order:
        u = _two_level_sech_unitary(detunings_mhz[i], pulse_length, dt)
        raw[i] = np.angle(u[1, 1] / u[0, 0])
    unwrapped = np.unwrap(raw[order])
    # anchor the branch so the value nearest zero detuning is near zero
    k = np.argmin(np.abs(detunings_mhz[order]))
    unwrapped -= 2 * np.pi * np.round(unwrapped[k] / (2 * np.pi))
    phases[order] = unwrapped

    rho0 = np.pi / (2.0 * pulse_length / 8.0)

    def cost(rho):
        pred = SECH_PHASE_SIGN * 4.0 * np.arctan(detunings_mhz * MHZ / rho)
        return float(np.sum((phases - pred) ** 2))

    res = minimize_scalar(cost, bracket=(rho0 * 0.8, rho0, rho0 * 1.2))
    rho_eff = float(res.x)
    resid = np.max(
        np.abs(phases - SECH_PHASE_SIGN * 4.0 * np.arctan(detunings_mhz * MHZ / rho_eff))
    )
    return ZPhaseMap(
        pulse_length=pulse_length,
        detunings=detunings_mhz,
        phases=phases,
        rho_eff=rho_eff,
        rho_analytic=rho0,
        max_residual=float(resid),
    )


def _transmon_w01(spec: DeviceSpec, qubit: int) -> float:
    return spec.q1_w01 if qubit == 1 else spec.q2_w01


def _single_qubit_noise(spec: DeviceSpec, qubit: int) -> NoiseSpec:
    t1 = spec.t1_q1 if qubit == 1 else spec.t1_q2
    t2 = spec.t2star_q1 if qubit == 1 else spec.t2star_q2
    return NoiseSpec(t1=(t1, t1), t2star=(t2, t2))


def _transmon_hamiltonian(spec: DeviceSpec, qubit: int) -> Operator:
    lv = spec.levels_per_transmon
    w = _transmon_w01(spec, qubit) * GHZ
    alpha = (spec.alpha1 if qubit == 1 else spec.alpha2) * 1e-3 * GHZ
    n = np.arange(lv)
    return Operator((lv,), np.diag(w * n + alpha * n * (n - 1) / 2.0))


def _superop_of_evolution(
    h: Operator,
    drives: list[Drive],
    noise: NoiseSpec | None,
    t_total: float,
    dt: float,
    frame_ghz,
) -> np.ndarray:
    """Full superoperator propagator over [0, t_total].

    Uses a Strang split per step: the (time-independent) dissipator
    half-step is exponentiated once, the Hamiltonian step comes from an
    eigendecomposition. Runs of identical steps are raised to a matrix
    power, so flat pulse segments cost a single exponential.
    """
    from .pulse import _prepare_terms, _assemble_step, _step_count

    n = _step_count(t_total, dt)
    h0, rot_terms, drive_terms = _prepare_terms(h, drives, frame_ghz)
    collapse = collapse_operators(h.dims, noise) if noise is not None else []
    dim = h.dim
    d_half = None
    if collapse:
        dissipator = lindblad_generator(np.zeros((dim, dim)), collapse)
        d_half = expm(dissipator * dt / 2.0)

    def step_prop(h_step):
        evals, vecs = np.linalg.eigh(h_step)
        u = (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T
        s = np.kron(u.conj(), u)
        if d_half is not None:
            s = d_half @ s @ d_half
        return s

    s_total = np.eye(dim * dim, dtype=complex)
    k = 0
    prev_h = None
    prev_prop = None
    while k < n:
        t_mid = (k + 0.5) * dt
        h_step = _assemble_step(h0, rot_terms, drive_terms, t_mid, dt)
        if prev_h is not None and np.array_equal(h_step, prev_h):
            # count the run of identical steps and exponentiate once
            run = 1
            while k + run < n:
                h_next = _assemble_step(h0, rot_terms, drive_terms, (k + run + 0.5) * dt, dt)
                if not np.array_equal(h_next, prev_h):
                    break
                run += 1
            s_total = np.linalg.matrix_power(prev_prop, run) @ s_total
            k += run
            continue
        prop = step_prop(h_step)
        s_total = prop @ s_total
        prev_h, prev_prop = h_step, prop
        k += 1
    return s_total


def _extract_qubit_channel(
    s_full: np.ndarray, dim: int, basis_vectors: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Compress a d-level superoperator onto a qubit subspace.

    ``basis_vectors`` holds the two (or four) subspace columns. Returns the
    (sub)channel superoperator on the subspace plus the per-basis-state
    trace deficit; the deficit is routed to the maximally mixed state so the
    returned channel is trace preserving.
    """
    nsub = basis_vectors.shape[1]
    v = basis_vectors
    s_sub = np.empty((nsub * nsub, nsub * nsub), dtype=complex)
    for c in range(nsub):
        for r_i in range(nsub):
            e_in = np.outer(v[:, r_i], v[:, c].conj())
            out_full = (s_full @ e_in.reshape(-1, order="F")).reshape(dim, dim, order="F")
            out_sub = v.conj().T @ out_full @ v
            s_sub[:, c * nsub + r_i] = out_sub.reshape(-1, order="F")
    # trace deficit as a functional Tr[D rho]: D = I - E^dag(I) on the subspace;
    # Tr[D |r><c|] = D[c, r]
    d_op = np.eye(nsub, dtype=complex)
    for c in range(nsub):
        for r_i in range(nsub):
            out = s_sub[:, c * nsub + r_i].reshape(nsub, nsub, order="F")
            d_op[c, r_i] -= np.trace(out)
    leak = np.real(np.diag(d_op)).copy()
    s_fix = np.outer(
        (np.eye(nsub) / nsub).reshape(-1, order="F"),
        d_op.T.reshape(-1, order="F"),
    )
    return s_sub + s_fix, leak


# ---------------------------------------------------------------------------
# Z-phase gate
# ---------------------------------------------------------------------------

def z_phase_gate(
    qubit: int,
    detuning: float,
    pulse_length: float = 400.0,
    simulate: bool = False,
    spec: DeviceSpec | None = None,
    noise: NoiseSpec | None = None,
    phase_map: ZPhaseMap | None = None,
    dt: float = 0.25,
) -> GateChannel:
    """Z-axis phase gate from a cyclic sech pulse at the given detuning (MHz).

    Ideal mode returns diag(1, e^{i phase}) on the addressed qubit (phase
    from the calibrated map) tensored with identity. Simulate mode evolves
    the driven multi-level transmon and the idling partner, including
    decoherence when ``noise`` is given.
    """
    if qubit not in (1, 2):
        raise DimensionMismatch(f"qubit must be 1 or 2, got {qubit}")
    if not simulate:
        if phase_map is None or phase_map.pulse_length != pulse_length:
            phase_map = calibrate_z_phase_map(pulse_length)
        phi = phase_map.phase_of(detuning)
        zq = np.diag([1.0, np.exp(1j * phi)])
        u = np.kron(zq, np.eye(2)) if qubit == 1 else np.kron(np.eye(2), zq)
        return GateChannel(kind="unitary", duration=pulse_length, u=u)

    if spec is None:
        raise InvalidSpec("simulate mode needs a device spec")
    s_driven, leak_driven = _simulate_z_on_transmon(
        spec, qubit, detuning, pulse_length, noise, dt
    )
    s_idle, _ = _simulate_idle_transmon(spec, 3 - qubit, pulse_length, noise, dt)
    if qubit == 1:
        s2q = kron_superop(s_driven, s_idle)
    else:
        s2q = kron_superop(s_idle, s_driven)
    r = ptm_of_superop(s2q).r
    leak4 = np.zeros(4)
    for idx, (n1, n2) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        nq = n1 if qubit == 1 else n2
        leak4[idx] = leak_driven[nq]
    return GateChannel(
        kind="superoperator", duration=pulse_length, r=r,
        leakage=leak4, validate=False,
    )


def _simulate_z_on_transmon(spec, qubit, detuning_mhz, pulse_length, noise, dt):
    """Driven multi-level transmon; returns (qubit superop, leak per basis state)."""
    h = _transmon_hamiltonian(spec, qubit)
    w01 = _transmon_w01(spec, qubit)
    carrier = w01 + detuning_mhz * 1e-3
    p = SechPulse.from_length(pulse_length, carrier_detuning=detuning_mhz)
    drv = Drive(0, lambda t: sech_envelope(p, t), carrier)
    n = int(round(pulse_length / dt))
    if noise is None:
        from .pulse import evolve_unitary

        u = evolve_unitary(h, [drv], pulse_length, pulse_length / n, (carrier,))
        u = frame_change(u, (carrier,), (w01,), 0.0, pulse_length)
        s = np.kron(u.data.conj(), u.data)
    else:
        nq = _single_qubit_noise(spec, qubit)
        s = _superop_of_evolution(h, [drv], nq, pulse_length, pulse_length / n, (carrier,))
        s = _superop_frame_change(s, h.dims, (carrier,), (w01,), pulse_length)
    lv = spec.levels_per_transmon
    basis = np.eye(lv, dtype=complex)[:, :2]
    return _extract_qubit_channel(s, lv, basis)


def _simulate_idle_transmon(spec, qubit, duration, noise, dt):
    """Undriven transmon over the same window (identity unless noisy)."""
    h = _transmon_hamiltonian(spec, qubit)
    w01 = _transmon_w01(spec, qubit)
    nq = _single_qubit_noise(spec, qubit) if noise is not None else None
    if nq is None:
        lv = spec.levels_per_transmon
        s = np.eye(lv * lv, dtype=complex)
    else:
        s = _superop_of_evolution(h, [], nq, duration, duration, (w01,))
    lv = spec.levels_per_transmon
    basis = np.eye(lv, dtype=complex)[:, :2]
    return _extract_qubit_channel(s, lv, basis)


def _superop_frame_change(s, dims, frame_from, frame_to, t1, t0=0.0):
    """Frame conversion of a superoperator propagator (diagonal frames)."""
    from .pulse import frame_phases

    d_from = frame_phases(dims, frame_from)
    d_to = frame_phases(dims, frame_to)
    d = d_to - d_from
    left = np.exp(1j * d * t1)
    right = np.exp(-1j * d * t0)
    # conjugation rho -> L rho L^dag as a superoperator, column stacking
    def conj_superop(diag_phase):
        l_mat = np.diag(diag_phase)
        return np.kron(l_mat.conj(), l_mat)

    return conj_superop(left) @ s @ conj_superop(right)


# ---------------------------------------------------------------------------
# The conditional (MAP) gate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapCalibration:
    """Everything the composed cNOT needs about the conditional gate."""

    t_g: float                     # ns
    stark: StarkTone
    delta_eps: float               # MHz, Stark shift of |01>
    delta_eps_prime: float         # MHz, Stark shift of |11>
    phi: float = 0.0               # rad, phase on |01>
    phi_prime: float = 0.0         # rad, phase picked up by |10> -> |11>
    delta1: float = 0.0            # MHz, Z gate detuning on Q1
    delta2: float = 0.0            # MHz, Z gate detuning on Q2
    z_length: float = 400.0        # ns
    flux_offset: float = 0.0       # MHz, Q1 frequency offset at alignment

    def __post_init__(self):
        if self.t_g <= 0:
            raise InvalidSpec("t_g must be positive")
        beat_cycles = abs(self.delta_eps - self.delta_eps_prime) * 1e-3 * self.t_g
        if abs(beat_cycles - 0.5) > 0.02 * 0.5:
            raise InvalidSpec(
                f"out-of-phase condition violated: |d_eps - d_eps'|*t_g = "
                f"{beat_cycles:.4f} cycles, expected 0.5 within 2%"
            )

    def to_config(self, path: str | Path) -> None:
        import configparser

        cp = configparser.ConfigParser()
        cp["calibration"] = {
            "t_g_ns": repr(float(self.t_g)),
            "delta_eps_mhz": repr(float(self.delta_eps)),
            "delta_eps_prime_mhz": repr(float(self.delta_eps_prime)),
            "phi_rad": repr(float(self.phi)),
            "phi_prime_rad": repr(float(self.phi_prime)),
            "delta1_mhz": repr(float(self.delta1)),
            "delta2_mhz": repr(float(self.delta2)),
            "z_length_ns": repr(float(self.z_length)),
            "flux_offset_mhz": repr(float(self.flux_offset)),
        }
        cp["stark"] = {
            "frequency_ghz": repr(float(self.stark.frequency)),
            "amplitude_rad_per_ns": repr(float(self.stark.amplitude)),
            "duration_ns": repr(float(self.stark.duration)),
            "rise_fall_ns": repr(float(self.stark.rise_fall)),
            "ramp": self.stark.ramp,
        }
        with open(path, "w") as fh:
            fh.write("# Conditional-gate calibration; unit suffixes are part of the keys.\n")
            cp.write(fh)

    @classmethod
    def from_config(cls, path: str | Path) -> "MapCalibration":
        import configparser

        from .errors import ConfigParse

        cp = configparser.ConfigParser()
        if not cp.read(path) or "calibration" not in cp or "stark" not in cp:
            raise ConfigParse(f"missing [calibration]/[stark] sections in {path}")
        c, s = cp["calibration"], cp["stark"]
        stark = StarkTone(
            frequency=s.getfloat("frequency_ghz"),
            amplitude=s.getfloat("amplitude_rad_per_ns"),
            duration=s.getfloat("duration_ns"),
            rise_fall=s.getfloat("rise_fall_ns", fallback=10.0),
            ramp=s.get("ramp", fallback="cosine"),
        )
        return cls(
            t_g=c.getfloat("t_g_ns"),
            stark=stark,
            delta_eps=c.getfloat("delta_eps_mhz"),
            delta_eps_prime=c.getfloat("delta_eps_prime_mhz"),
            phi=c.getfloat("phi_rad", fallback=0.0),
            phi_prime=c.getfloat("phi_prime_rad", fallback=0.0),
            delta1=c.getfloat("delta1_mhz", fallback=0.0),
            delta2=c.getfloat("delta2_mhz", fallback=0.0),
            z_length=c.getfloat("z_length_ns", fallback=400.0),
            flux_offset=c.getfloat("flux_offset_mhz", fallback=0.0),
        )


def _ry_on_q2(theta: float, levels: int) -> np.ndarray:
    """Ideal rotation on Q2's 0-1 subspace, identity elsewhere."""
    r = np.eye(levels, dtype=complex)
    r[:2, :2] = ry(theta)
    return np.kron(np.eye(levels, dtype=complex), r)


def stark_segment_unitary(
    spec: DeviceSpec, cal: MapCalibration, duration: float | None = None, dt: float = 0.2
) -> Operator:
    """Propagator of the Stark-driven two-transmon system, canonical frame.

    Computed in the common frame at the Stark carrier where the exchange
    coupling and the flat part of the drive are static, then converted to
    the per-transmon frame at the bare 0-1 frequencies.
    """
    from .pulse import evolve_unitary

    t_total = cal.t_g if duration is None else duration
    tone = replace(cal.stark, duration=t_total)
    w1_op = spec.q1_w01 + cal.flux_offset * 1e-3
    h = build_hamiltonian(spec, w1_op)
    drv = Drive(1, lambda t: stark_envelope(tone, t), tone.frequency)
    fs = tone.frequency
    n = max(1, int(round(t_total / dt)))
    u = evolve_unitary(h, [drv], t_total, t_total / n, frame_ghz=(fs, fs))
    return frame_change(u, (fs, fs), (w1_op, spec.q2_w01), 0.0, t_total)


def _stark_segment_superop(spec, cal, noise, dt=0.2):
    t_total = cal.t_g
    w1_op = spec.q1_w01 + cal.flux_offset * 1e-3
    h = build_hamiltonian(spec, w1_op)
    drv = Drive(1, lambda t: stark_envelope(cal.stark, t), cal.stark.frequency)
    fs = cal.stark.frequency
    n = max(1, int(round(t_total / dt)))
    s = _superop_of_evolution(h, [drv], noise, t_total, t_total / n, (fs, fs))
    return _superop_frame_change(s, h.dims, (fs, fs), (w1_op, spec.q2_w01), t_total)


def _check_alignment(spec: DeviceSpec, cal: MapCalibration) -> None:
    gap_at_op, _, _ = _pair_gap(spec, cal.flux_offset)
    _, gap_min = _min_gap_continuous(spec)
    if gap_at_op > 2.0 * gap_min:
        raise UnalignedDevice(
            f"dressed gap {gap_at_op:.2f} MHz at the operating point exceeds "
            f"twice the aligned splitting {gap_min:.2f} MHz"
        )


def simulate_map_gate(
    spec: DeviceSpec,
    cal: MapCalibration,
    with_noise: bool = False,
    dt: float = 0.2,
) -> GateChannel:
    """Channel of the full conditional gate on the computational subspace.

    The sequence is (pi/2 on Q2) - Stark tone for t_g - (-pi/2 on Q2); the
    channel is extracted on the four dressed computational states and the
    leaked weight is recorded per input basis state.
    """
    if abs(cal.stark.duration - cal.t_g) > 1e-9:
        raise InvalidSpec("stark.duration must equal t_g")
    _check_alignment(spec, cal)
    w1_op = spec.q1_w01 + cal.flux_offset * 1e-3
    lv = spec.levels_per_transmon
    _, evecs, labels = dressed_frame(spec, w1_op)
    comp = np.column_stack(
        [evecs[:, labels[n1 * lv + n2]] for n1 in range(2) for n2 in range(2)]
    )
    pre = _ry_on_q2(np.pi / 2, lv)
    post = _ry_on_q2(-np.pi / 2, lv)

    if not with_noise:
        u_stark = stark_segment_unitary(spec, cal, dt=dt)
        u_full = post @ u_stark.data @ pre
        block = comp.conj().T @ u_full @ comp
        leak = 1.0 - np.sum(np.abs(block) ** 2, axis=0)
        s_sub = np.kron(block.conj(), block)
        d_op = np.eye(4, dtype=complex) - block.conj().T @ block
        s_fix = np.outer(
            (np.eye(4) / 4.0).reshape(-1, order="F"), d_op.T.reshape(-1, order="F")
        )
        r = ptm_of_superop(s_sub + s_fix).r
        return GateChannel(
            kind="superoperator", duration=cal.t_g, r=r,
            leakage=np.real(leak), block=block, validate=False,
        )

    noise = NoiseSpec.from_device(spec)
    s = _stark_segment_superop(spec, cal, noise, dt=dt)
    s = np.kron(post.conj(), post) @ s @ np.kron(pre.conj(), pre)
    s_sub, leak = _extract_qubit_channel(s, lv * lv, comp)
    r = ptm_of_superop(s_sub).r
    u_noiseless = simulate_map_gate(spec, cal, with_noise=False, dt=dt)
    return GateChannel(
        kind="superoperator", duration=cal.t_g, r=r,
        leakage=leak, block=u_noiseless.block, validate=False,
    )


def map_phases_from_channel(ch: GateChannel) -> tuple[float, float]:
    """Extract (phi, phi_prime) from a conditional-gate channel block."""
    k = ch.block
    if k is None:
        raise DimensionMismatch("channel carries no raw block")
    ref = np.angle(k[0, 0])
    phi = float(np.angle(k[1, 1]) - ref)
    phi_prime = float(np.angle(k[3, 2]) - ref)
    return (np.angle(np.exp(1j * phi)), np.angle(np.exp(1j * phi_prime)))


def compose_cnot(
    spec: DeviceSpec,
    cal: MapCalibration,
    with_noise: bool = False,
    ideal_phases: bool = False,
    phase_map: ZPhaseMap | None = None,
    dt: float = 0.2,
) -> GateChannel:
    """cNOT = conditional gate followed by simultaneous Z gates on both qubits.

    ``ideal_phases`` composes the algebraic conditional gate with ideal
    Z phases instead of running pulse simulations (the Z gates still run in
    one shared slot, so the duration is t_g + z_length either way).
    """
    if phase_map is None or phase_map.pulse_length != cal.z_length:
        phase_map = calibrate_z_phase_map(cal.z_length)
    if ideal_phases:
        u_map = ideal_map_unitary(cal.phi, cal.phi_prime).data
        z1 = np.diag([1.0, np.exp(1j * phase_map.phase_of(cal.delta1))])
        z2 = np.diag([1.0, np.exp(1j * phase_map.phase_of(cal.delta2))])
        u = np.kron(z1, z2) @ u_map
        return GateChannel(kind="unitary", duration=cal.t_g + cal.z_length, u=u)

    map_ch = simulate_map_gate(spec, cal, with_noise=with_noise, dt=dt)
    noise = NoiseSpec.from_device(spec) if with_noise else None
    s1, leak1 = _simulate_z_on_transmon(spec, 1, cal.delta1, cal.z_length, noise, dt=0.25)
    s2, leak2 = _simulate_z_on_transmon(spec, 2, cal.delta2, cal.z_length, noise, dt=0.25)
    r_z = ptm_of_superop(kron_superop(s1, s2)).r
    z_leak = np.array([leak1[n1] + leak2[n2] for n1 in (0, 1) for n2 in (0, 1)])
    z_ch = GateChannel(
        kind="superoperator", duration=cal.z_length, r=r_z,
        leakage=z_leak, validate=False,
    )
    return map_ch.then(z_ch)
