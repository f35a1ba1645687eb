"""Joint-readout state and process tomography with physical reconstruction.

The measurement is a single joint operator M = b_II*II + b_ZI*ZI + b_IZ*IZ
+ b_ZZ*ZZ read after one of 36 pre-pulses {I, X_pi, X_+-pi/2, Y_+-pi/2} x
{same}; process tomography uses the same 36 pre-pulses for state
preparation, giving 36 x 36 = 1296 settings. Reconstruction is Gaussian
least squares constrained to physical objects: states through a square-root
factorisation rho = T T^dag / Tr[T T^dag], channels through a positive
Choi factor with the trace-preserving constraint restored by projection
after every step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionMismatch, OptimizerFailed
from .linalg import DensityMatrix, PAULI_2Q, pauli_vector, rx, ry
from .ptm import (
    PauliTransferMatrix,
    choi_cp_project,
    choi_cptp_project,
    choi_to_ptm,
    choi_tp_project,
    process_fidelity,
    ptm_of_unitary,
    ptm_to_choi,
)

__all__ = [
    "ReadoutModel",
    "MeasurementRecord",
    "single_qubit_prepulses",
    "prepulse_set",
    "readout_expectation",
    "run_qst",
    "run_qpt",
    "reconstruct_state_mle",
    "reconstruct_ptm_mle",
    "ptm_of_unitary",
    "process_fidelity",
    "betas_from_states",
]

_PREPULSE_LABELS = ("I", "Xpi", "Xpi2", "Xmpi2", "Ypi2", "Ympi2")


@dataclass(frozen=True)
class ReadoutModel:
    """Calibrated joint two-qubit readout operator.

    ``shot_count`` = 0 returns exact expectation values; otherwise each value
    is perturbed consistently with single-shot statistics of the four-level
    projective readout (Gaussian by default, multinomial optionally).
    """

    beta_ii: float = 2.72
    beta_zi: float = 1.10
    beta_iz: float = 0.86
    beta_zz: float = 0.44
    shot_count: int = 0
    sampling: str = "gaussian"     # "gaussian" | "multinomial"

    def __post_init__(self):
        if self.beta_ii <= 0:
            raise DimensionMismatch("beta_II must be positive")

    def pauli_coefficients(self) -> np.ndarray:
        """M as a coefficient vector over the 16-element Pauli basis."""
        m = np.zeros(16)
        m[0] = self.beta_ii    # II
        m[12] = self.beta_zi   # ZI
        m[3] = self.beta_iz    # IZ
        m[15] = self.beta_zz   # ZZ
        return m

    def operator(self) -> np.ndarray:
        m = self.pauli_coefficients()
        out = np.zeros((4, 4), dtype=complex)
        for coeff, p in zip(m, PAULI_2Q):
            if coeff:
                out += coeff * p
        return out

    def state_values(self) -> np.ndarray:
        """Single-shot readout value of each computational state."""
        return np.real(np.diag(self.operator()))


@dataclass(frozen=True)
class MeasurementRecord:
    """Tomography data: one value per (preparation, pre-pulse) setting.

    ``prep_index`` is -1 when the state was prepared externally (QST).
    """

    settings: tuple[tuple[int, int], ...]
    values: np.ndarray
    shots: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if len(self.settings) != vals.size:
            raise DimensionMismatch("settings/values length mismatch")
        if len(set(self.settings)) != len(self.settings):
            raise DimensionMismatch("duplicate settings in record")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "settings", tuple(tuple(s) for s in self.settings))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prep_index", "prepulse_index", "value", "shots"])
            for (i, j), v in zip(self.settings, self.values):
                writer.writerow([i, j, f"{float(v)!r}", self.shots])

    @classmethod
    def from_csv(cls, path: str | Path) -> "MeasurementRecord":
        settings, values, shots = [], [], 0
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                settings.append((int(row["prep_index"]), int(row["prepulse_index"])))
                values.append(float(row["value"]))
                shots = int(row["shots"])
        return cls(settings=tuple(settings), values=np.array(values), shots=shots)


def single_qubit_prepulses() -> list[np.ndarray]:
    """The 6-element set {I, X_pi, X_pi/2, X_-pi/2, Y_pi/2, Y_-pi/2}.

    Applied to |0> these reach all six Bloch axes: +-Z, -+Y, +-X.
    """
    return [
        np.eye(2, dtype=complex),
        rx(np.pi),
        rx(np.pi / 2),
        rx(-np.pi / 2),
        ry(np.pi / 2),
        ry(-np.pi / 2),
    ]


def prepulse_set() -> list[np.ndarray]:
    """All 36 two-qubit pre-pulses, Q1 index slow: index = 6*i1 + i2."""
    singles = single_qubit_prepulses()
    return [np.kron(u1, u2) for u1 in singles for u2 in singles]


def readout_expectation(
    rho: DensityMatrix,
    model: ReadoutModel,
    rng: np.random.Generator | None = None,
) -> float:
    """<M> for a two-qubit state, optionally with finite-shot scatter."""
    if rho.dim != 4:
        raise DimensionMismatch(f"need a 4x4 state, got side {rho.dim}")
    pops = np.clip(np.real(np.diag(rho.data)), 0.0, None)
    pops = pops / pops.sum()
    vals = model.state_values()
    mean = float(pops @ vals)
    if model.shot_count <= 0:
        return mean
    if rng is None:
        rng = np.random.default_rng(0)
    n = model.shot_count
    if model.sampling == "multinomial":
        counts = rng.multinomial(n, pops)
        return float(counts @ vals / n)
    var = float(pops @ vals**2 - mean**2)
    return mean + rng.normal(0.0, np.sqrt(max(var, 0.0) / n))


def _as_state(prepare) -> DensityMatrix:
    rho = prepare() if callable(prepare) else prepare
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix((2, 2), np.asarray(rho, dtype=complex), validate=False)


def run_qst(
    prepare,
    gate_under_test=None,
    model: ReadoutModel | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementRecord:
    """36-setting state tomography of (gate applied to) a prepared state."""
    if model is None:
        model = ReadoutModel()
    rho = _as_state(prepare).data
    if gate_under_test is not None:
        rho = gate_under_test.apply(rho)
    pulses = prepulse_set()
    settings, values = [], []
    for j, p in enumerate(pulses):
        rho_j = p @ rho @ p.conj().T
        settings.append((-1, j))
        values.append(
            readout_expectation(DensityMatrix((2, 2), rho_j, validate=False), model, rng)
        )
    return MeasurementRecord(tuple(settings), np.array(values), shots=model.shot_count)


def run_qpt(
    channel,
    model: ReadoutModel | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementRecord:
    """1296-setting process tomography: prepare with pre-pulse i, apply the
    channel, rotate with pre-pulse j, read out."""
    if model is None:
        model = ReadoutModel()
    pulses = prepulse_set()
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    settings, values = [], []
    for i, p_i in enumerate(pulses):
        rho_in = p_i @ rho00 @ p_i.conj().T
        rho_out = channel.apply(rho_in)
        for j, p_j in enumerate(pulses):
            rho_j = p_j @ rho_out @ p_j.conj().T
            settings.append((i, j))
            values.append(
                readout_expectation(DensityMatrix((2, 2), rho_j, validate=False), model, rng)
            )
    return MeasurementRecord(tuple(settings), np.array(values), shots=model.shot_count)


def betas_from_states(values_by_state: Sequence[float]) -> ReadoutModel:
    """Fit the four beta coefficients from readout of |00>,|01>,|10>,|11>."""
    y = np.asarray(values_by_state, dtype=float)
    if y.shape != (4,):
        raise DimensionMismatch("need exactly four computational-state values")
    # rows: (1, z1, z2, z1 z2) for each state
    h = np.array([
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ], dtype=float)
    b_ii, b_zi, b_iz, b_zz = np.linalg.solve(h, y)
    return ReadoutModel(beta_ii=b_ii, beta_zi=b_zi, beta_iz=b_iz, beta_zz=b_zz)


# ---------------------------------------------------------------------------
# State reconstruction
# ---------------------------------------------------------------------------

def _qst_design(model: ReadoutModel, prepulse_indices: Sequence[int]) -> np.ndarray:
    """Hermitian observables A_j = P_j^dag M P_j, stacked (n, 4, 4)."""
    pulses = prepulse_set()
    m_op = model.operator()
    return np.stack([pulses[j].conj().T @ m_op @ pulses[j] for j in prepulse_indices])


def _tri_indices(d: int):
    rows, cols = np.tril_indices(d)
    off = rows != cols
    return rows, cols, off


def _params_to_tri(params: np.ndarray, d: int) -> np.ndarray:
    rows, cols, off = _tri_indices(d)
    n_diag = d
    t = np.zeros((d, d), dtype=complex)
    t[rows[~off], cols[~off]] = params[:n_diag]
    n_off = off.sum()
    re = params[n_diag : n_diag + n_off]
    im = params[n_diag + n_off :]
    t[rows[off], cols[off]] = re + 1j * im
    return t


def _tri_to_params(t: np.ndarray) -> np.ndarray:
    d = t.shape[0]
    rows, cols, off = _tri_indices(d)
    diag = np.real(t[rows[~off], cols[~off]])
    re = np.real(t[rows[off], cols[off]])
    im = np.imag(t[rows[off], cols[off]])
    return np.concatenate([diag, re, im])


def _factor_psd(mat: np.ndarray, jitter: float = 1e-8) -> np.ndarray:
    """Lower-triangular factor of a (nearly) PSD Hermitian matrix."""
    herm = (mat + mat.conj().T) / 2.0
    evals, vecs = np.linalg.eigh(herm)
    evals = np.clip(evals, jitter, None)
    psd = (vecs * evals) @ vecs.conj().T
    psd = psd + jitter * np.eye(mat.shape[0])
    return np.linalg.cholesky(psd)


def reconstruct_state_mle(
    record: MeasurementRecord, model: ReadoutModel
) -> DensityMatrix:
    """Physical density matrix minimising the squared readout residuals.

    The state is parameterised as rho = T T^dag / Tr[T T^dag] with lower
    triangular T, so Hermiticity, positivity and unit trace hold by
    construction.
    """
    prepulse_indices = [j for (_, j) in record.settings]
    if len(set(prepulse_indices)) < 16:
        raise OptimizerFailed("record is informationally insufficient (< 16 pre-pulses)")
    a_ops = _qst_design(model, prepulse_indices)
    y = record.values

    # linear inversion in the Pauli basis for the starting point
    design = np.stack(
        [[np.real(np.trace(a @ p)) / 4.0 for p in PAULI_2Q] for a in a_ops]
    )
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    rho0 = sum(c * p for c, p in zip(coeffs, PAULI_2Q)) / 4.0
    t0 = _factor_psd(rho0 / np.trace(rho0).real, jitter=1e-6)
    x0 = _tri_to_params(t0)

    def objective(params):
        t = _params_to_tri(params, 4)
        gram = t @ t.conj().T
        s = np.real(np.trace(gram))
        rho = gram / s
        v = np.real(np.einsum("jab,ba->j", a_ops, rho))
        r = v - y
        f = float(r @ r)
        # d f / d conj(T) = sum_j 2 r_j (A_j - v_j I) T / s
        mat = np.einsum("j,jab->ab", 2.0 * r, a_ops) - np.eye(4) * float(2.0 * r @ v)
        g = (mat @ t) / s
        rows, cols, off = _tri_indices(4)
        g_diag = 2.0 * np.real(g[rows[~off], cols[~off]])
        g_re = 2.0 * np.real(g[rows[off], cols[off]])
        g_im = 2.0 * np.imag(g[rows[off], cols[off]])
        return f, np.concatenate([g_diag, g_re, g_im])

    res = minimize(
        objective, x0, jac=True, method="L-BFGS-B",
        options={"maxiter": 10_000, "gtol": 1e-8, "ftol": 1e-15},
    )
    if not np.all(np.isfinite(res.x)):
        raise OptimizerFailed("state reconstruction produced non-finite parameters")
    t = _params_to_tri(res.x, 4)
    gram = t @ t.conj().T
    rho = gram / np.real(np.trace(gram))
    return DensityMatrix((2, 2), rho, validate=False)


# ---------------------------------------------------------------------------
# Process reconstruction
# ---------------------------------------------------------------------------

_DESIGN_CACHE: dict = {}


def _qpt_design(model: ReadoutModel) -> np.ndarray:
    """Real design matrix X with y = X vec(R) over the 1296 settings."""
    key = (model.beta_ii, model.beta_zi, model.beta_iz, model.beta_zz)
    if key in _DESIGN_CACHE:
        return _DESIGN_CACHE[key]
    pulses = prepulse_set()
    m = model.pauli_coefficients()
    rho00 = np.zeros((4, 4), dtype=complex)
    rho00[0, 0] = 1.0
    p_in = []
    c_out = []
    for p in pulses:
        rho_in = p @ rho00 @ p.conj().T
        p_in.append(pauli_vector(DensityMatrix((2, 2), rho_in, validate=False)).entries)
        c_out.append(ptm_of_unitary(p).r.T @ m)
    x = np.empty((1296, 256))
    k = 0
    for i in range(36):
        for j in range(36):
            x[k] = np.outer(c_out[j], p_in[i]).ravel()
            k += 1
    _DESIGN_CACHE[key] = x
    return x


def _choi_to_ptm_fast(choi: np.ndarray) -> np.ndarray:
    s4 = choi.reshape(4, 4, 4, 4).transpose(3, 1, 2, 0).reshape(16, 16)
    from .ptm import _PAULI_VEC

    return np.real(_PAULI_VEC.conj().T @ s4 @ _PAULI_VEC)


def _ptm_grad_to_choi(grad_r: np.ndarray) -> np.ndarray:
    from .ptm import _PAULI_VEC

    s_grad = _PAULI_VEC @ grad_r @ _PAULI_VEC.conj().T
    return s_grad.reshape(4, 4, 4, 4).transpose(3, 1, 2, 0).reshape(16, 16)


def reconstruct_ptm_mle(
    record: MeasurementRecord,
    model: ReadoutModel,
    max_iter: int = 300,
    grad_tol: float = 1e-8,
) -> PauliTransferMatrix:
    """Physical transfer matrix from a full 1296-setting record.

    Linear inversion seeds an alternating-projection step onto the
    CP-and-TP set; a projected gradient refinement on the positive Choi
    factor then polishes the least-squares fit, restoring trace
    preservation by projection after every update.
    """
    if len(record.settings) != 1296:
        raise OptimizerFailed("process reconstruction needs the full 1296-setting record")
    order = np.lexsort(
        (np.array([j for (_, j) in record.settings]), np.array([i for (i, _) in record.settings]))
    )
    y = record.values[order]
    x = _qpt_design(model)

    r0, *_ = np.linalg.lstsq(x, y, rcond=None)
    choi = choi_cptp_project(ptm_to_choi(r0.reshape(16, 16)), tol=1e-9, max_iter=600)

    xtx = x.T @ x
    xty = x.T @ y

    def f_and_grad_r(r_flat):
        g = xtx @ r_flat - xty
        f = float(r_flat @ xtx @ r_flat - 2.0 * r_flat @ xty + y @ y)
        return f, 2.0 * g

    t = _factor_psd(choi, jitter=1e-10)
    f_prev = None
    step = 1.0 / np.linalg.norm(xtx, 2)
    for it in range(max_iter):
        c = t @ t.conj().T
        r = _choi_to_ptm_fast(c)
        f, grad_r_flat = f_and_grad_r(r.ravel())
        grad_c = _ptm_grad_to_choi(grad_r_flat.reshape(16, 16))
        grad_t = 2.0 * grad_c @ t
        gnorm = float(np.linalg.norm(grad_t))
        if gnorm < grad_tol:
            break
        t_new = t - step * grad_t
        c_new = choi_tp_project(t_new @ t_new.conj().T)
        r_new = _choi_to_ptm_fast(c_new)
        f_new, _ = f_and_grad_r(r_new.ravel())
        if f_prev is not None and f_new > f_prev + 1e-15:
            step *= 0.5
            if step < 1e-12:
                break
            continue
        t = _factor_psd(c_new, jitter=1e-12)
        f_prev = f_new
    if not np.all(np.isfinite(t)):
        raise OptimizerFailed("process reconstruction produced non-finite parameters")
    # land exactly in the CP-and-TP intersection, then restore TP to
    # machine precision (the residual CP cost is at the projection tolerance)
    choi_final = choi_cptp_project(t @ t.conj().T, tol=1e-10, max_iter=500)
    choi_final = choi_tp_project(choi_final)
    r_final = _choi_to_ptm_fast(choi_final)
    return PauliTransferMatrix(r_final, cp_enforced=True)
