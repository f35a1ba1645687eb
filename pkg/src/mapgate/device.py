"""Static two-transmon (optionally plus cavity) device model.

Each transmon is a truncated Duffing ladder H_q = w01*n + (alpha/2)*n(n-1).
The default two-mode model couples the transmons by a direct
excitation-exchange term j_eff*(a b^dag + a^dag b) standing in for the
cavity-mediated interaction; j_eff is fixed by calibrating the simulated
|12>/|03> splitting against the measured value. A three-mode variant with
an explicit cavity is available for cross-checks (cavity_levels >= 1).

Flux tuning enters as a direct offset on Q1's 0-1 frequency; w12 follows
through the fixed anharmonicity.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import GHZ, TWO_PI
from .errors import CalibrationDiverged, InvalidSpec, NoCrossingInRange
from .linalg import Operator

__all__ = [
    "DeviceSpec",
    "AlignmentResult",
    "default_device_spec",
    "build_hamiltonian",
    "level_alignment_scan",
    "calibrate_coupling",
    "three_tone_spectrum",
    "dressed_frame",
    "default_flux_grid",
]

# Effective exchange coupling reproducing a 15 MHz |12>/|03> splitting for
# the shipped device parameters (see calibrate_coupling).
_DEFAULT_J_EFF_MHZ = 4.33


@dataclass(frozen=True)
class DeviceSpec:
    """Two-transmon device parameters. Frequencies GHz, alphas/couplings MHz,
    coherence times us."""

    q1_w01: float = 5.6498
    q1_w12: float = 5.3336
    q2_w01: float = 6.2903
    q2_w12: float = 5.9852
    alpha1: float = -316.2
    alpha2: float = -305.1
    g: float = 122.0
    cavity_freq: float = 7.16207
    t1_q1: float = 21.0
    t1_q2: float = 15.0
    t2star_q1: float = 5.0
    t2star_q2: float = 11.0
    levels_per_transmon: int = 4
    cavity_levels: int = 0
    j_eff: float = _DEFAULT_J_EFF_MHZ

    def __post_init__(self):
        if self.levels_per_transmon < 4:
            raise InvalidSpec("need at least 4 levels per transmon (|03> must exist)")
        if self.cavity_levels < 0:
            raise InvalidSpec("cavity_levels must be >= 0")
        for q, (w01, w12, alpha) in enumerate(
            [(self.q1_w01, self.q1_w12, self.alpha1), (self.q2_w01, self.q2_w12, self.alpha2)],
            start=1,
        ):
            if alpha >= 0:
                raise InvalidSpec(f"alpha{q} must be negative, got {alpha} MHz")
            if abs(w12 - (w01 + alpha * 1e-3)) > 1e-6:
                raise InvalidSpec(
                    f"Q{q}: w12 = {w12} GHz inconsistent with w01 + alpha = "
                    f"{w01 + alpha * 1e-3} GHz"
                )
        for q, (t1, t2s) in enumerate(
            [(self.t1_q1, self.t2star_q1), (self.t1_q2, self.t2star_q2)], start=1
        ):
            if t1 <= 0 or t2s <= 0:
                raise InvalidSpec(f"Q{q}: coherence times must be positive")
            if t2s > 2 * t1 + 1e-12:
                raise InvalidSpec(f"Q{q}: T2* = {t2s} us exceeds 2*T1 = {2 * t1} us")

    def to_config(self, path: str | Path) -> None:
        """Write as a flat key-value config file (units in the key names)."""
        cp = configparser.ConfigParser()
        cp["device"] = {
            "q1_w01_ghz": repr(float(self.q1_w01)),
            "q1_w12_ghz": repr(float(self.q1_w12)),
            "q2_w01_ghz": repr(float(self.q2_w01)),
            "q2_w12_ghz": repr(float(self.q2_w12)),
            "alpha1_mhz": repr(float(self.alpha1)),
            "alpha2_mhz": repr(float(self.alpha2)),
            "g_mhz": repr(float(self.g)),
            "cavity_freq_ghz": repr(float(self.cavity_freq)),
            "t1_q1_us": repr(float(self.t1_q1)),
            "t1_q2_us": repr(float(self.t1_q2)),
            "t2star_q1_us": repr(float(self.t2star_q1)),
            "t2star_q2_us": repr(float(self.t2star_q2)),
            "levels_per_transmon": repr(int(self.levels_per_transmon)),
            "cavity_levels": repr(int(self.cavity_levels)),
            "j_eff_mhz": repr(float(self.j_eff)),
        }
        with open(path, "w") as fh:
            fh.write("# Two-transmon device parameters; unit suffixes are part of the keys.\n")
            cp.write(fh)

    @classmethod
    def from_config(cls, path: str | Path) -> "DeviceSpec":
        from .errors import ConfigParse

        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read or "device" not in cp:
            raise ConfigParse(f"no [device] section in {path}")
        sec = cp["device"]
        try:
            return cls(
                q1_w01=sec.getfloat("q1_w01_ghz"),
                q1_w12=sec.getfloat("q1_w12_ghz"),
                q2_w01=sec.getfloat("q2_w01_ghz"),
                q2_w12=sec.getfloat("q2_w12_ghz"),
                alpha1=sec.getfloat("alpha1_mhz"),
                alpha2=sec.getfloat("alpha2_mhz"),
                g=sec.getfloat("g_mhz"),
                cavity_freq=sec.getfloat("cavity_freq_ghz"),
                t1_q1=sec.getfloat("t1_q1_us"),
                t1_q2=sec.getfloat("t1_q2_us"),
                t2star_q1=sec.getfloat("t2star_q1_us"),
                t2star_q2=sec.getfloat("t2star_q2_us"),
                levels_per_transmon=sec.getint("levels_per_transmon", fallback=4),
                cavity_levels=sec.getint("cavity_levels", fallback=0),
                j_eff=sec.getfloat("j_eff_mhz", fallback=_DEFAULT_J_EFF_MHZ),
            )
        except (ValueError, TypeError) as exc:
            raise ConfigParse(f"bad device config {path}: {exc}") from exc


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of the flux scan aligning the |12> and |03> levels."""

    flux_param: float            # Q1 frequency offset at alignment, MHz
    delta: float                 # dressed splitting at alignment, MHz
    epsilon: float               # |01> -> |02> transition, GHz
    epsilon_prime: float         # |11> -> |12> transition (= eps - delta/2), GHz
    eigenbranch_gap_curve: np.ndarray  # columns (flux offset MHz, gap MHz)


def default_device_spec() -> DeviceSpec:
    """The shipped example device (measured two-transmon parameter set)."""
    return DeviceSpec()


def _bare_index(spec: DeviceSpec, n1: int, n2: int) -> int:
    return n1 * spec.levels_per_transmon + n2


def _destroy(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def build_hamiltonian(spec: DeviceSpec, q1_w01_override: float | None = None) -> Operator:
    """Lab-frame static Hamiltonian in rad/ns.

    Two-mode model (cavity_levels = 0): Duffing ladders exchange-coupled by
    j_eff. Three-mode model: ladders plus a cavity mode coupled to each
    transmon with strength g.
    """
    lv = spec.levels_per_transmon
    w1 = (q1_w01_override if q1_w01_override is not None else spec.q1_w01) * GHZ
    w2 = spec.q2_w01 * GHZ
    a1 = spec.alpha1 * 1e-3 * GHZ
    a2 = spec.alpha2 * 1e-3 * GHZ

    n_op = np.diag(np.arange(lv)).astype(complex)
    duff = np.diag(np.arange(lv) * (np.arange(lv) - 1) / 2.0).astype(complex)
    h1 = w1 * n_op + a1 * duff
    h2 = w2 * n_op + a2 * duff
    a = _destroy(lv)

    if spec.cavity_levels == 0:
        dims = (lv, lv)
        eye = np.eye(lv)
        h = np.kron(h1, eye) + np.kron(eye, h2)
        j = spec.j_eff * 1e-3 * GHZ
        h += j * (np.kron(a.conj().T, a) + np.kron(a, a.conj().T))
        return Operator(dims, h)

    cl = spec.cavity_levels
    dims = (lv, lv, cl)
    eye_t = np.eye(lv)
    eye_c = np.eye(cl)
    c = _destroy(cl)
    n_c = np.diag(np.arange(cl)).astype(complex)
    wr = spec.cavity_freq * GHZ
    g = spec.g * 1e-3 * GHZ
    h = (
        np.kron(np.kron(h1, eye_t), eye_c)
        + np.kron(np.kron(eye_t, h2), eye_c)
        + wr * np.kron(np.kron(eye_t, eye_t), n_c)
        + g * (np.kron(np.kron(a.conj().T, eye_t), c) + np.kron(np.kron(a, eye_t), c.conj().T))
        + g * (np.kron(np.kron(eye_t, a.conj().T), c) + np.kron(np.kron(eye_t, a), c.conj().T))
    )
    return Operator(dims, h)


def _assign_dressed(evals: np.ndarray, evecs: np.ndarray, bare_indices: Sequence[int]):
    """Greedy maximum-overlap labeling of eigenstates by bare basis index."""
    weights = np.abs(evecs[np.asarray(bare_indices), :]) ** 2  # (n_bare, n_eig)
    assignment: dict[int, int] = {}
    used: set[int] = set()
    order = np.dstack(np.unravel_index(np.argsort(weights, axis=None)[::-1], weights.shape))[0]
    for b_pos, e_pos in order:
        b = bare_indices[b_pos]
        if b in assignment or e_pos in used:
            continue
        assignment[b] = int(e_pos)
        used.add(int(e_pos))
        if len(assignment) == len(bare_indices):
            break
    return assignment


def _pair_gap(spec: DeviceSpec, offset_mhz: float) -> tuple[float, np.ndarray, dict]:
    """Dressed gap (MHz) of the two eigenstates carrying the |12>/|03> pair."""
    h = build_hamiltonian(spec, spec.q1_w01 + offset_mhz * 1e-3)
    evals, evecs = np.linalg.eigh(h.data)
    i12 = _bare_index(spec, 1, 2)
    i03 = _bare_index(spec, 0, 3)
    pair_weight = np.abs(evecs[i12, :]) ** 2 + np.abs(evecs[i03, :]) ** 2
    top2 = np.argsort(pair_weight)[-2:]
    gap = abs(evals[top2[0]] - evals[top2[1]]) / TWO_PI * 1e3  # MHz
    labels = _assign_dressed(evals, evecs, [
        _bare_index(spec, 0, 0),
        _bare_index(spec, 0, 1),
        _bare_index(spec, 0, 2),
        _bare_index(spec, 1, 0),
        _bare_index(spec, 1, 1),
    ])
    return gap, evals, labels


def _bare_pair_detuning_ghz(spec: DeviceSpec, offset_mhz: float) -> float:
    """Bare E(12) - E(03) for the uncoupled ladders."""
    w1 = spec.q1_w01 + offset_mhz * 1e-3
    return w1 - spec.q2_w01 - 2 * spec.alpha2 * 1e-3


def default_flux_grid(spec: DeviceSpec, half_span_mhz: float = 25.0, step_mhz: float = 0.25) -> np.ndarray:
    """Offset grid centred on the bare |12>/|03> crossing."""
    center = -_bare_pair_detuning_ghz(spec, 0.0) * 1e3
    return center + np.arange(-half_span_mhz, half_span_mhz + step_mhz / 2, step_mhz)


def level_alignment_scan(spec: DeviceSpec, flux_grid: Sequence[float]) -> AlignmentResult:
    """Scan Q1 frequency offsets (MHz) and locate the avoided crossing.

    Returns the grid point minimising the dressed |12>/|03> branch gap,
    the splitting delta there, and the Stark-relevant transition
    frequencies epsilon and epsilon' = epsilon - delta/2.
    """
    flux_grid = np.asarray(list(flux_grid), dtype=float)
    if flux_grid.size == 0:
        raise NoCrossingInRange("empty flux grid")
    bare = np.array([_bare_pair_detuning_ghz(spec, f) for f in flux_grid])
    if np.min(bare) * np.max(bare) > 0:
        raise NoCrossingInRange(
            "bare |12>-|03> detuning does not change sign over the grid "
            f"(range {bare.min():.4f}..{bare.max():.4f} GHz)"
        )
    gaps = np.empty_like(flux_grid)
    cache = {}
    for i, f in enumerate(flux_grid):
        gaps[i], evals, labels = _pair_gap(spec, f)
        cache[i] = (evals, labels)
    i_min = int(np.argmin(gaps))
    evals, labels = cache[i_min]
    e01 = evals[labels[_bare_index(spec, 0, 1)]]
    e02 = evals[labels[_bare_index(spec, 0, 2)]]
    epsilon = (e02 - e01) / TWO_PI
    delta = float(gaps[i_min])
    return AlignmentResult(
        flux_param=float(flux_grid[i_min]),
        delta=delta,
        epsilon=float(epsilon),
        epsilon_prime=float(epsilon - delta * 1e-3 / 2.0),
        eigenbranch_gap_curve=np.column_stack([flux_grid, gaps]),
    )


def _min_gap_continuous(spec: DeviceSpec) -> tuple[float, float]:
    """Continuous minimisation of the branch gap over the flux offset."""
    center = -_bare_pair_detuning_ghz(spec, 0.0) * 1e3
    res = minimize_scalar(
        lambda f: _pair_gap(spec, f)[0],
        bracket=(center - 10.0, center, center + 10.0),
        method="brent",
        options={"xtol": 1e-6},
    )
    return float(res.x), float(res.fun)


def calibrate_coupling(spec: DeviceSpec, target_delta: float) -> DeviceSpec:
    """Choose j_eff so the simulated splitting matches ``target_delta`` (MHz).

    Secant iteration on j_eff; every other spec field is left unchanged.
    """
    if target_delta <= 0:
        raise CalibrationDiverged(f"target splitting must be positive, got {target_delta}")
    j = spec.j_eff if spec.j_eff > 0 else 1.0
    _, d0 = _min_gap_continuous(replace(spec, j_eff=j))
    # The gap is linear in the coupling to first order; start from the scaled guess.
    j_prev, d_prev = j, d0
    j = j * target_delta / d0
    for _ in range(100):
        _, d = _min_gap_continuous(replace(spec, j_eff=j))
        if abs(d - target_delta) <= 1e-3 * target_delta:
            return replace(spec, j_eff=j)
        slope = (d - d_prev) / (j - j_prev) if abs(j - j_prev) > 1e-12 else None
        j_prev, d_prev = j, d
        if slope is None or slope <= 0:
            j = j * target_delta / d
        else:
            j = j + (target_delta - d) / slope
        if j <= 0:
            j = j_prev / 2.0
    raise CalibrationDiverged(
        f"coupling calibration did not reach {target_delta} MHz in 100 iterations"
    )


def three_tone_spectrum(
    spec: DeviceSpec,
    flux_grid: Sequence[float],
    probe_grid: Sequence[float],
    linewidth_mhz: float = 1.0,
) -> np.ndarray:
    """Spectroscopy intensity map over (flux offset MHz, probe GHz).

    Lorentzian lines at the transitions out of the dressed |02> state into
    the two |12>/|03> branches, plus the unbent Q1 0-1 line (|00> -> |10>)
    that runs straight through the avoided crossing.
    """
    flux_grid = np.asarray(list(flux_grid), dtype=float)
    probe_grid = np.asarray(list(probe_grid), dtype=float)
    gamma = linewidth_mhz * 1e-3  # GHz, half width
    out = np.zeros((flux_grid.size, probe_grid.size))
    i12 = _bare_index(spec, 1, 2)
    i03 = _bare_index(spec, 0, 3)
    for i, f in enumerate(flux_grid):
        h = build_hamiltonian(spec, spec.q1_w01 + f * 1e-3)
        evals, evecs = np.linalg.eigh(h.data)
        pair_weight = np.abs(evecs[i12, :]) ** 2 + np.abs(evecs[i03, :]) ** 2
        top2 = sorted(np.argsort(pair_weight)[-2:])
        labels = _assign_dressed(evals, evecs, [
            _bare_index(spec, 0, 0),
            _bare_index(spec, 0, 2),
            _bare_index(spec, 1, 0),
        ])
        e00 = evals[labels[_bare_index(spec, 0, 0)]]
        e02 = evals[labels[_bare_index(spec, 0, 2)]]
        e10 = evals[labels[_bare_index(spec, 1, 0)]]
        lines = [
            (evals[top2[0]] - e02) / TWO_PI,
            (evals[top2[1]] - e02) / TWO_PI,
            (e10 - e00) / TWO_PI,
        ]
        for line in lines:
            out[i] += 1.0 / (1.0 + ((probe_grid - line) / gamma) ** 2)
    return out


def dressed_frame(spec: DeviceSpec, q1_w01_override: float | None = None):
    """Static eigensystem with bare-state labels for the computational states.

    Returns (energies rad/ns, eigenvector matrix, {bare index: eigen index}).
    """
    h = build_hamiltonian(spec, q1_w01_override)
    evals, evecs = np.linalg.eigh(h.data)
    lv = spec.levels_per_transmon
    labels = _assign_dressed(
        evals, evecs, [n1 * lv + n2 for n1 in range(2) for n2 in range(3)]
    )
    return evals, evecs, labels
