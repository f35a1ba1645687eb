"""Time-domain drives and propagation.

All gate simulations run in a rotating frame defined by one frame frequency
per subsystem (generator F = sum_q f_q * n_q) with the rotating-wave
approximation applied to the drives; carriers enter as detunings from the
frame. The default frame rotates each transmon at its bare 0-1 frequency.
Choosing the frame frequency equal to a drive's carrier on every subsystem
makes that drive and the exchange coupling time independent, which is how
the gate constructors obtain machine-converged propagators for flat pulse
segments.

The integrator is a fixed-step piecewise-constant propagator: each step
exponentiates the Hamiltonian sampled at the step midpoint, with an exact
sinc correction for the phase integral of every rotating term. The open
system path exponentiates the Liouvillian superoperator per step, which
preserves trace and positivity by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .constants import GHZ, US
from .device import DeviceSpec
from .errors import NonConvergedStep, OutOfWindow
from .linalg import DensityMatrix, Operator

__all__ = [
    "SechPulse",
    "StarkTone",
    "NoiseSpec",
    "Drive",
    "PulseSegment",
    "sech_envelope",
    "stark_envelope",
    "evolve_unitary",
    "evolve_lindblad",
    "frame_phases",
    "frame_change",
    "collapse_operators",
    "lindblad_generator",
    "default_frame",
    "write_pulse_sequence",
    "read_pulse_sequence",
    "write_time_trace",
]


@dataclass(frozen=True)
class SechPulse:
    """Hyperbolic-secant envelope for the Z-axis phase gate.

    The bandwidth rho and width sigma obey sigma = pi/(2 rho); the window
    spans +-4 sigma, so total_length = 8 sigma. The default amplitude 2 rho
    is the cyclic-evolution condition: the transition probability of the
    driven two-level system vanishes for every detuning, leaving only the
    detuning-dependent phase.
    """

    sigma: float                  # ns
    amplitude: float              # rad/ns, peak Rabi rate
    carrier_detuning: float = 0.0  # MHz, relative to the addressed transition
    phase: float = 0.0            # rad

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def rho_bandwidth(self) -> float:
        """rad/ns; sigma = pi/(2 rho) inverted."""
        return np.pi / (2.0 * self.sigma)

    @property
    def total_length(self) -> float:
        return 8.0 * self.sigma

    @classmethod
    def from_length(
        cls, total_length: float, carrier_detuning: float = 0.0, phase: float = 0.0,
        amplitude: float | None = None,
    ) -> "SechPulse":
        sigma = total_length / 8.0
        rho = np.pi / (2.0 * sigma)
        return cls(
            sigma=sigma,
            amplitude=(2.0 * rho if amplitude is None else amplitude),
            carrier_detuning=carrier_detuning,
            phase=phase,
        )


def sech_envelope(pulse: SechPulse, t: float) -> float:
    """Envelope value at t in [0, total_length]; peak at the midpoint."""
    if t < 0.0 or t > pulse.total_length:
        raise OutOfWindow(f"t = {t} ns outside [0, {pulse.total_length}] ns")
    return pulse.amplitude / np.cosh(pulse.rho_bandwidth * (t - pulse.total_length / 2.0))


@dataclass(frozen=True)
class StarkTone:
    """Strong off-resonant tone inducing ac-Stark shifts on Q2's 1-2 ladder."""

    frequency: float = 6.0152     # GHz
    amplitude: float = 0.10       # rad/ns drive strength
    duration: float = 1070.0      # ns
    rise_fall: float = 10.0       # ns edge length
    ramp: str = "cosine"          # "cosine" | "blackman"


def _ramp_shape(x: float, kind: str) -> float:
    """Monotone 0 -> 1 edge profile on x in [0, 1]."""
    x = min(max(x, 0.0), 1.0)
    if kind == "blackman":
        # half of a Blackman window; C^1 with much weaker spectral tails
        # than the cosine edge, which suppresses diabatic branch leakage
        return (0.42 - 0.5 * np.cos(np.pi * x) + 0.08 * np.cos(2 * np.pi * x)) / 0.84
    return 0.5 * (1.0 - np.cos(np.pi * x))


def stark_envelope(tone: StarkTone, t: float) -> float:
    """Flat-top envelope with shaped ramps of length rise_fall."""
    tr = tone.rise_fall
    if t < 0.0 or t > tone.duration:
        return 0.0
    if tr <= 0:
        return tone.amplitude
    if t < tr:
        return tone.amplitude * _ramp_shape(t / tr, tone.ramp)
    if t > tone.duration - tr:
        return tone.amplitude * _ramp_shape((tone.duration - t) / tr, tone.ramp)
    return tone.amplitude


@dataclass(frozen=True)
class NoiseSpec:
    """Relaxation and dephasing rates per transmon (times in us)."""

    t1: tuple[float, float]
    t2star: tuple[float, float]

    def __post_init__(self):
        for q in range(2):
            if self.t1[q] <= 0 or self.t2star[q] <= 0:
                raise ValueError("coherence times must be positive")
            raw = 1.0 / (self.t2star[q] * US) - 0.5 / (self.t1[q] * US)
            if raw < -1e-15:
                raise ValueError(
                    f"transmon {q}: T2* = {self.t2star[q]} us exceeds 2*T1, "
                    "implying a negative pure-dephasing rate"
                )

    @classmethod
    def from_device(cls, spec: DeviceSpec) -> "NoiseSpec":
        return cls(t1=(spec.t1_q1, spec.t1_q2), t2star=(spec.t2star_q1, spec.t2star_q2))

    def pure_dephasing_rate(self, q: int) -> float:
        """1/T_phi = 1/T2* - 1/(2 T1), in 1/ns."""
        return max(0.0, 1.0 / (self.t2star[q] * US) - 0.5 / (self.t1[q] * US))

    def relaxation_rate(self, q: int) -> float:
        return 1.0 / (self.t1[q] * US)


@dataclass(frozen=True)
class Drive:
    """A carrier on one subsystem's charge-like ladder operator (a + a^dag).

    ``envelope`` maps time in ns (relative to the drive's own start) to a
    Rabi rate in rad/ns; a float means a constant envelope.
    """

    target: int
    envelope: Callable[[float], float] | float
    carrier_ghz: float
    phase: float = 0.0
    t_start: float = 0.0

    def amp(self, t: float) -> float:
        if callable(self.envelope):
            return float(self.envelope(t - self.t_start))
        return float(self.envelope)


def default_frame(spec: DeviceSpec) -> tuple[float, ...]:
    """Per-transmon frame at the bare 0-1 frequencies (GHz)."""
    return (spec.q1_w01, spec.q2_w01)


@dataclass(frozen=True)
class PulseSegment:
    """One entry of a serialisable pulse sequence.

    ``kind`` selects the envelope ("sech", "stark", "constant"); the segment
    carries its own duration and enough parameters to rebuild the drive.
    """

    kind: str
    target: int
    carrier_ghz: float
    duration: float
    amplitude: float
    phase: float = 0.0
    rise_fall: float = 0.0
    ramp: str = "cosine"

    def drive(self) -> Drive:
        if self.kind == "sech":
            pulse = SechPulse.from_length(
                self.duration, amplitude=self.amplitude, phase=self.phase
            )
            return Drive(
                self.target, lambda t: sech_envelope(pulse, t),
                self.carrier_ghz, phase=self.phase,
            )
        if self.kind == "stark":
            tone = StarkTone(
                frequency=self.carrier_ghz, amplitude=self.amplitude,
                duration=self.duration, rise_fall=self.rise_fall, ramp=self.ramp,
            )
            return Drive(self.target, lambda t: stark_envelope(tone, t), self.carrier_ghz)
        if self.kind == "constant":
            return Drive(self.target, self.amplitude, self.carrier_ghz, phase=self.phase)
        raise ValueError(f"unknown segment kind {self.kind!r}")


def write_pulse_sequence(path, segments: Sequence[PulseSegment]) -> None:
    """Serialize an ordered pulse sequence to a structured text file."""
    import configparser

    cp = configparser.ConfigParser()
    for i, seg in enumerate(segments):
        cp[f"segment.{i}"] = {
            "kind": seg.kind,
            "target": str(seg.target),
            "carrier_ghz": repr(float(seg.carrier_ghz)),
            "duration_ns": repr(float(seg.duration)),
            "amplitude_rad_per_ns": repr(float(seg.amplitude)),
            "phase_rad": repr(float(seg.phase)),
            "rise_fall_ns": repr(float(seg.rise_fall)),
            "ramp": seg.ramp,
        }
    with open(path, "w") as fh:
        fh.write("# Ordered pulse sequence; unit suffixes are part of the keys.\n")
        cp.write(fh)


def read_pulse_sequence(path) -> list[PulseSegment]:
    import configparser

    from .errors import ConfigParse

    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigParse(f"cannot read pulse sequence {path}")
    segments = []
    for i in range(len(cp.sections())):
        name = f"segment.{i}"
        if name not in cp:
            raise ConfigParse(f"missing section {name} in {path}")
        sec = cp[name]
        segments.append(
            PulseSegment(
                kind=sec.get("kind"),
                target=sec.getint("target"),
                carrier_ghz=sec.getfloat("carrier_ghz"),
                duration=sec.getfloat("duration_ns"),
                amplitude=sec.getfloat("amplitude_rad_per_ns"),
                phase=sec.getfloat("phase_rad", fallback=0.0),
                rise_fall=sec.getfloat("rise_fall_ns", fallback=0.0),
                ramp=sec.get("ramp", fallback="cosine"),
            )
        )
    return segments


def write_time_trace(path, t_ns: np.ndarray, columns: dict) -> None:
    """Emit a time trace as CSV with a t_ns column plus one per observable."""
    import csv as _csv

    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["t_ns"] + names)
        for k, t in enumerate(np.asarray(t_ns)):
            writer.writerow([f"{float(t)!r}"] + [f"{float(columns[n][k])!r}" for n in names])


def frame_phases(dims: Sequence[int], frame_ghz: Sequence[float]) -> np.ndarray:
    """Diagonal of the frame generator F = sum_q f_q n_q, rad/ns."""
    dims = tuple(dims)
    if len(frame_ghz) != len(dims):
        raise ValueError(f"{len(frame_ghz)} frame frequencies for {len(dims)} subsystems")
    diag = np.zeros(int(np.prod(dims)))
    for idx in range(diag.size):
        rem, n_q = idx, []
        for d in reversed(dims):
            n_q.append(rem % d)
            rem //= d
        n_q.reverse()
        diag[idx] = sum(f * GHZ * n for f, n in zip(frame_ghz, n_q))
    return diag


def frame_change(
    u: Operator,
    frame_from_ghz: Sequence[float],
    frame_to_ghz: Sequence[float],
    t0: float,
    t1: float,
) -> Operator:
    """Re-express a propagator U(t1 <- t0) computed in one rotating frame
    in another. Both frames share the lab frame at t = 0."""
    f_from = frame_phases(u.dims, frame_from_ghz)
    f_to = frame_phases(u.dims, frame_to_ghz)
    d = f_to - f_from
    left = np.exp(1j * d * t1)
    right = np.exp(-1j * d * t0)
    return Operator(u.dims, (left[:, None] * u.data) * right[None, :])


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def _embed(op: np.ndarray, target: int, dims: Sequence[int]) -> np.ndarray:
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[target] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def _static_terms(h_lab: np.ndarray, f_diag: np.ndarray):
    """Split a lab Hamiltonian into frame-static and rotating parts.

    Element (a, b) acquires phase exp(i (F_a - F_b) t) in the frame; terms
    are grouped by that frequency. Returns (h_static_frame, rotating) where
    rotating is a list of (matrix A, freq nu) contributing A e^{i nu t} + h.c.
    """
    delta = f_diag[:, None] - f_diag[None, :]
    h_frame0 = np.where(np.abs(delta) < 1e-12, h_lab, 0.0) - np.diag(f_diag)
    rotating = []
    pos = np.unique(np.round(delta[np.abs(delta) > 1e-12], 12))
    for nu in pos[pos > 0]:
        mask = np.abs(delta - nu) < 1e-9
        if np.any(mask & (np.abs(h_lab) > 0)):
            rotating.append((np.where(mask, h_lab, 0.0), float(nu)))
    return h_frame0, rotating


def _sinc(x: float) -> float:
    return float(np.sinc(x / np.pi))


def _assemble_step(h0, rot_terms, drive_terms, t_mid, dt):
    """Hamiltonian for one step: midpoint sample with exact phase averaging."""
    h = h0.copy()
    for a_mat, nu in rot_terms:
        ph = np.exp(1j * nu * t_mid) * _sinc(nu * dt / 2.0)
        h += a_mat * ph + (a_mat * ph).conj().T
    for raising, nu, phase, drive in drive_terms:
        w = drive.amp(t_mid)
        if w == 0.0:
            continue
        ph = 0.5 * w * np.exp(1j * (nu * t_mid + phase)) * _sinc(nu * dt / 2.0)
        h += raising * ph + (raising * ph).conj().T
    return h


def _prepare_terms(h_static: Operator, drives, frame_ghz):
    dims = h_static.dims
    if frame_ghz is None:
        raise ValueError("frame_ghz is required (per-subsystem frame frequencies)")
    f_diag = frame_phases(dims, frame_ghz)
    h0, rot_terms = _static_terms(h_static.data, f_diag)
    drive_terms = []
    for drv in drives:
        raising = _embed(_ladder(dims[drv.target]).conj().T, drv.target, dims)
        # a^dag carries e^{i f_q t} in frame; with the carrier it rotates at
        # nu = f_q - omega_d and the drive phase enters with a minus sign.
        nu = frame_ghz[drv.target] * GHZ - drv.carrier_ghz * GHZ
        drive_terms.append((raising, nu, -drv.phase, drv))
    return h0, rot_terms, drive_terms


def _step_count(t_total: float, dt: float) -> int:
    n = int(round(t_total / dt))
    if n <= 0 or abs(n * dt - t_total) > 1e-9:
        raise ValueError(f"dt = {dt} ns does not divide t_total = {t_total} ns")
    return n


def evolve_unitary(
    h_static: Operator,
    drives: Sequence[Drive],
    t_total: float,
    dt: float,
    frame_ghz: Sequence[float],
    t0: float = 0.0,
    check_dt: bool = False,
    check_tol: float = 1e-6,
) -> Operator:
    """Propagator over [t0, t0 + t_total] in the given rotating frame.

    ``h_static`` is the lab-frame static Hamiltonian (rad/ns). With
    ``check_dt`` the result is compared against a half-step run and
    NonConvergedStep is raised if they differ by more than ``check_tol``
    in max-element norm.
    """
    u = _evolve_unitary_raw(h_static, drives, t_total, dt, frame_ghz, t0)
    if check_dt:
        u_half = _evolve_unitary_raw(h_static, drives, t_total, dt / 2.0, frame_ghz, t0)
        dev = float(np.max(np.abs(u.data - u_half.data)))
        if dev > check_tol:
            raise NonConvergedStep(f"halving dt changes the propagator by {dev:.2e}")
    return u


def _evolve_unitary_raw(h_static, drives, t_total, dt, frame_ghz, t0) -> Operator:
    n = _step_count(t_total, dt)
    h0, rot_terms, drive_terms = _prepare_terms(h_static, drives, frame_ghz)
    dim = h_static.dim
    u = np.eye(dim, dtype=complex)
    for k in range(n):
        t_mid = t0 + (k + 0.5) * dt
        h = _assemble_step(h0, rot_terms, drive_terms, t_mid, dt)
        evals, vecs = np.linalg.eigh(h)
        step = (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T
        u = step @ u
    return Operator(h_static.dims, u)


def collapse_operators(dims: Sequence[int], noise: NoiseSpec) -> list[np.ndarray]:
    """Lindblad jump operators: sqrt(1/T1) a_q and sqrt(2/T_phi) n_q.

    The number-operator dephasing reproduces an off-diagonal decay rate of
    1/T2* on the 0-1 subspace when combined with relaxation.
    """
    ops = []
    for q, dim in enumerate(dims[:2]):
        a = _ladder(dim)
        n_op = np.diag(np.arange(dim)).astype(complex)
        g_relax = noise.relaxation_rate(q)
        if g_relax > 0:
            ops.append(np.sqrt(g_relax) * _embed(a, q, dims))
        g_phi = noise.pure_dephasing_rate(q)
        if g_phi > 0:
            ops.append(np.sqrt(2.0 * g_phi) * _embed(n_op, q, dims))
    return ops


def lindblad_generator(h: np.ndarray, collapse: Sequence[np.ndarray]) -> np.ndarray:
    """Column-stacking Liouvillian: d vec(rho)/dt = L vec(rho)."""
    dim = h.shape[0]
    eye = np.eye(dim)
    lind = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in collapse:
        cd_c = c.conj().T @ c
        lind += np.kron(c.conj(), c) - 0.5 * (np.kron(eye, cd_c) + np.kron(cd_c.T, eye))
    return lind


def evolve_lindblad(
    rho0: DensityMatrix,
    h_static: Operator,
    drives: Sequence[Drive],
    noise: NoiseSpec | None,
    t_total: float,
    dt: float,
    frame_ghz: Sequence[float],
    t0: float = 0.0,
    check_dt: bool = False,
    check_tol: float = 1e-6,
) -> DensityMatrix:
    """Open-system evolution; with ``noise=None`` it reduces to the unitary path."""
    rho = _evolve_lindblad_raw(rho0, h_static, drives, noise, t_total, dt, frame_ghz, t0)
    if check_dt:
        rho_half = _evolve_lindblad_raw(
            rho0, h_static, drives, noise, t_total, dt / 2.0, frame_ghz, t0
        )
        dev = float(np.max(np.abs(rho.data - rho_half.data)))
        if dev > check_tol:
            raise NonConvergedStep(f"halving dt changes the state by {dev:.2e}")
    return rho


def _evolve_lindblad_raw(rho0, h_static, drives, noise, t_total, dt, frame_ghz, t0):
    if noise is None:
        u = _evolve_unitary_raw(h_static, drives, t_total, dt, frame_ghz, t0)
        return DensityMatrix(rho0.dims, u.data @ rho0.data @ u.data.conj().T, validate=False)
    n = _step_count(t_total, dt)
    h0, rot_terms, drive_terms = _prepare_terms(h_static, drives, frame_ghz)
    collapse = collapse_operators(h_static.dims, noise)
    vec = rho0.data.reshape(-1, order="F").astype(complex)
    cached_h = None
    cached_prop = None
    for k in range(n):
        t_mid = t0 + (k + 0.5) * dt
        h = _assemble_step(h0, rot_terms, drive_terms, t_mid, dt)
        if cached_h is not None and np.array_equal(h, cached_h):
            prop = cached_prop
        else:
            prop = expm(lindblad_generator(h, collapse) * dt)
            cached_h, cached_prop = h, prop
        vec = prop @ vec
    dim = rho0.dim
    rho = vec.reshape(dim, dim, order="F")
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix(rho0.dims, rho, validate=False)
