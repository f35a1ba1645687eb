"""Batch orchestrator: run named experiments end-to-end from a config file.

Usage: mapgate <experiment> --config <file> [--seed N] [--out DIR]

Experiments: spectroscopy, stark-ramsey, calibrate-zgate,
calibrate-map-phases, qst, qpt, cnot-fidelity, dj. Every run writes its
data files (CSV for curves, JSON for matrices and summaries), optional
figures, and a manifest listing inputs, seed, and produced artifacts.
Exit codes: 0 success, 1 config error, 2 simulation error, 3
reconstruction error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .device import calibrate_coupling, level_alignment_scan, default_flux_grid, three_tone_spectrum
from .errors import (
    ConfigParse,
    MapgateError,
    OptimizerFailed,
    UnknownExperiment,
)
from .gates import (
    MapCalibration,
    calibrate_z_phase_map,
    canonical_cnot,
    compose_cnot,
    unitary_channel,
    z_phase_gate,
)
from .linalg import DensityMatrix, ry, state_fidelity
from .ptm import process_fidelity, ptm_of_unitary
from .tomography import (
    ReadoutModel,
    reconstruct_ptm_mle,
    reconstruct_state_mle,
    run_qpt,
    run_qst,
)

EXPERIMENTS = (
    "spectroscopy",
    "stark-ramsey",
    "calibrate-zgate",
    "calibrate-map-phases",
    "qst",
    "qpt",
    "cnot-fidelity",
    "dj",
)


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{float(v)!r}" if isinstance(v, float) else v for v in row])
    return path


def _write_json(path: Path, obj) -> Path:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _model(cfg: ExperimentConfig) -> ReadoutModel:
    return ReadoutModel(shot_count=cfg.shots)


def _prepared_device(cfg: ExperimentConfig):
    return calibrate_coupling(cfg.device, 15.0)


def _calibration(cfg: ExperimentConfig, spec, outdir: Path, artifacts: list) -> MapCalibration:
    if cfg.calibration is not None:
        return cfg.calibration
    from .calibration import build_map_calibration

    cal = build_map_calibration(spec)
    path = outdir / "calibration.ini"
    cal.to_config(path)
    artifacts.append(path)
    return cal


def _exp_spectroscopy(cfg: ExperimentConfig, rng, outdir: Path):
    spec = _prepared_device(cfg)
    flux = np.linspace(
        cfg.getfloat("flux_min_mhz", 5.0),
        cfg.getfloat("flux_max_mhz", 55.0),
        cfg.getint("flux_steps", 101),
    )
    probe = np.linspace(
        cfg.getfloat("probe_min_ghz", 5.60),
        cfg.getfloat("probe_max_ghz", 5.72),
        cfg.getint("probe_steps", 241),
    )
    lw = cfg.getfloat("linewidth_mhz", 1.0)
    intensity = three_tone_spectrum(spec, flux, probe, linewidth_mhz=lw)
    rows = [
        (flux[i], probe[j], float(intensity[i, j]))
        for i in range(flux.size)
        for j in range(probe.size)
    ]
    files = [_write_csv(outdir / "spectrum.csv", ["flux_mhz", "probe_ghz", "intensity"], rows)]
    scan = level_alignment_scan(spec, default_flux_grid(spec))
    results = {
        "alignment_flux_mhz": scan.flux_param,
        "splitting_mhz": scan.delta,
        "epsilon_ghz": scan.epsilon,
        "epsilon_prime_ghz": scan.epsilon_prime,
    }
    files.append(_write_json(outdir / "alignment.json", results))
    if cfg.figures:
        from .figures import render_heatmap

        files.append(
            render_heatmap(flux, probe, intensity, outdir / "spectrum.png",
                           "flux offset (MHz)", "probe (GHz)", "three-tone spectroscopy")
        )
    return results, files


def _exp_stark_ramsey(cfg: ExperimentConfig, rng, outdir: Path):
    from dataclasses import replace

    from .calibration import (
        RAMSEY_ACQUISITION_RISE_NS,
        find_tg,
        stark_ramsey,
        tune_stark_tone,
    )
    from .pulse import NoiseSpec

    spec = _prepared_device(cfg)
    tone, flux_offset, info = tune_stark_tone(
        spec, target_beat_mhz=cfg.getfloat("target_beat_mhz", 0.467)
    )
    acq = replace(
        tone,
        rise_fall=cfg.getfloat("acquisition_rise_fall_ns", RAMSEY_ACQUISITION_RISE_NS),
    )
    delays = np.arange(
        2 * acq.rise_fall + 4.0,
        cfg.getfloat("delay_max_ns", 2400.0),
        cfg.getfloat("delay_step_ns", 8.0),
    )
    noise = NoiseSpec.from_device(spec) if cfg.noise else None
    traces = {}
    files = []
    for ctl in (0, 1):
        tr = stark_ramsey(spec, acq, ctl, delays, noise=noise, flux_offset=flux_offset)
        traces[ctl] = tr
        files.append(
            _write_csv(
                outdir / f"ramsey_control{ctl}.csv",
                ["delay_ns", "population"],
                zip(tr.delays.tolist(), tr.values.tolist()),
            )
        )
    t_g = find_tg(traces[0], traces[1])
    results = {
        "fitted_freq_control0_mhz": traces[0].fitted_freq,
        "fitted_freq_control1_mhz": traces[1].fitted_freq,
        "t_g_ns": t_g,
        "stark_frequency_ghz": tone.frequency,
        "stark_amplitude_rad_per_ns": tone.amplitude,
    }
    files.append(_write_json(outdir / "stark_ramsey.json", results))
    if cfg.figures:
        from .figures import render_traces

        files.append(
            render_traces(
                {
                    "control 0": (traces[0].delays, traces[0].values),
                    "control 1": (traces[1].delays, traces[1].values),
                },
                outdir / "ramsey.png", "delay (ns)", "population",
                f"Stark Ramsey, t_g = {t_g:.0f} ns",
            )
        )
    return results, files


def _exp_calibrate_zgate(cfg: ExperimentConfig, rng, outdir: Path):
    length = cfg.getfloat("pulse_length_ns", 400.0)
    grid = np.linspace(
        cfg.getfloat("detuning_min_mhz", -5.0),
        cfg.getfloat("detuning_max_mhz", 5.0),
        cfg.getint("detuning_steps", 21),
    )
    pm = calibrate_z_phase_map(length, grid)
    fit = np.array([pm.phase_of(d) for d in pm.detunings])
    files = [
        _write_csv(
            outdir / "phase_map.csv",
            ["detuning_mhz", "phase_rad", "fitted_phase_rad"],
            zip(pm.detunings.tolist(), pm.phases.tolist(), fit.tolist()),
        )
    ]
    results = {
        "pulse_length_ns": pm.pulse_length,
        "rho_eff_rad_per_ns": pm.rho_eff,
        "rho_analytic_rad_per_ns": pm.rho_analytic,
        "max_residual_rad": pm.max_residual,
        "phase_sign": pm.sign,
    }
    files.append(_write_json(outdir / "phase_map.json", results))
    if cfg.figures:
        from .figures import render_phase_map

        files.append(
            render_phase_map(pm.detunings, pm.phases, fit, outdir / "phase_map.png",
                             f"sech phase law, {length:.0f} ns")
        )
    return results, files


def _exp_calibrate_map_phases(cfg: ExperimentConfig, rng, outdir: Path):
    from .calibration import sweep_delta1, sweep_delta2, verify_cancellation
    from .pulse import NoiseSpec

    spec = _prepared_device(cfg)
    files: list = []
    cal = _calibration(cfg, spec, outdir, files)
    noise = NoiseSpec.from_device(spec) if cfg.noise else None
    model = _model(cfg)
    grid = np.linspace(
        cfg.getfloat("detuning_min_mhz", -6.0),
        cfg.getfloat("detuning_max_mhz", 6.0),
        cfg.getint("detuning_steps", 49),
    )
    s2 = sweep_delta2(spec, cal, detunings=grid, noise=noise, model=model, rng=rng)
    from dataclasses import replace

    cal = replace(cal, delta2=s2.optimum)
    s1 = sweep_delta1(spec, cal, detunings=grid, noise=noise, model=model, rng=rng)
    cal = replace(cal, delta1=s1.optimum)
    for name, sweep in (("delta2", s2), ("delta1", s1)):
        files.append(
            _write_csv(
                outdir / f"sweep_{name}.csv",
                ["detuning_mhz", "value_II", "value_XX", "value_YY"],
                zip(
                    sweep.detunings.tolist(),
                    sweep.curves["II"].tolist(),
                    sweep.curves["XX"].tolist(),
                    sweep.curves["YY"].tolist(),
                ),
            )
        )
        if cfg.figures:
            from .figures import render_sweep

            files.append(
                render_sweep(sweep.detunings, sweep.curves, sweep.optimum,
                             outdir / f"sweep_{name}.png", f"{name} compensation sweep")
            )
    rho, fid = verify_cancellation(spec, cal, noise=noise, model=model, shots=cfg.shots, rng=rng)
    cal.to_config(outdir / "calibration.ini")
    files.append(outdir / "calibration.ini")
    results = {
        "delta2_mhz": s2.optimum,
        "delta1_mhz": s1.optimum,
        "cancellation_fidelity": fid,
    }
    files.append(_write_json(outdir / "map_phases.json", results))
    if cfg.figures:
        from .figures import render_density_matrix

        files.append(
            render_density_matrix(rho.data, outdir / "cancellation_state.png",
                                  f"final state, fidelity {fid:.3f}")
        )
    return results, files


_NAMED_STATES = {
    "zero": lambda: np.array([1, 0, 0, 0], dtype=complex),
    "bell": lambda: np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "plus-q2": lambda: np.array([1, 1, 0, 0], dtype=complex) / np.sqrt(2),
    "plus-q1": lambda: np.array([1, 0, 1, 0], dtype=complex) / np.sqrt(2),
}


def _named_gate(name: str, cfg: ExperimentConfig, spec, outdir, files, z_length=300.0):
    if name == "none":
        return None
    if name == "identity":
        return unitary_channel(np.eye(4, dtype=complex))
    if name == "ideal-cnot":
        return unitary_channel(canonical_cnot())
    if name == "simulated-cnot":
        cal = _calibration(cfg, spec, outdir, files)
        return compose_cnot(spec, cal, with_noise=cfg.noise)
    if name in ("z1-pi2", "z2-pi2"):
        from .pulse import NoiseSpec

        qubit = 1 if name == "z1-pi2" else 2
        pm = calibrate_z_phase_map(z_length)
        detuning = pm.detuning_for(np.pi / 2)
        noise = NoiseSpec.from_device(spec) if cfg.noise else None
        return z_phase_gate(
            qubit, detuning, z_length, simulate=True, spec=spec, noise=noise, phase_map=pm
        )
    raise ConfigParse(f"unknown gate {name!r}")


def _exp_qst(cfg: ExperimentConfig, rng, outdir: Path):
    spec = _prepared_device(cfg)
    files: list = []
    state_name = cfg.getstr("state", "bell")
    if state_name not in _NAMED_STATES:
        raise ConfigParse(f"unknown state {state_name!r}")
    vec = _NAMED_STATES[state_name]()
    rho_in = DensityMatrix((2, 2), np.outer(vec, vec.conj()))
    gate = _named_gate(cfg.getstr("gate", "none"), cfg, spec, outdir, files)
    model = _model(cfg)
    record = run_qst(rho_in, gate, model, rng=rng)
    files.append(outdir / "qst_record.csv")
    record.to_csv(files[-1])
    rho_rec = reconstruct_state_mle(record, model)
    target = rho_in if gate is None else DensityMatrix(
        (2, 2), gate.apply(rho_in.data), validate=False
    )
    fid = state_fidelity(target, rho_rec)
    results = {"state": state_name, "fidelity_vs_target": fid}
    files.append(
        _write_json(
            outdir / "qst_state.json",
            {
                **results,
                "rho_real": np.real(rho_rec.data).tolist(),
                "rho_imag": np.imag(rho_rec.data).tolist(),
            },
        )
    )
    if cfg.figures:
        from .figures import render_density_matrix

        files.append(
            render_density_matrix(rho_rec.data, outdir / "qst_state.png",
                                  f"{state_name}, fidelity {fid:.4f}")
        )
    return results, files


def _exp_qpt(cfg: ExperimentConfig, rng, outdir: Path):
    spec = _prepared_device(cfg)
    files: list = []
    gate_name = cfg.getstr("gate", "ideal-cnot")
    z_length = cfg.getfloat("z_pulse_length_ns", 300.0)
    gate = _named_gate(gate_name, cfg, spec, outdir, files, z_length=z_length)
    if gate is None:
        raise ConfigParse("qpt needs a gate")
    model = _model(cfg)
    record = run_qpt(gate, model, rng=rng)
    files.append(outdir / "qpt_record.csv")
    record.to_csv(files[-1])
    r_rec = reconstruct_ptm_mle(record, model)
    ideals = {
        "identity": np.eye(4, dtype=complex),
        "ideal-cnot": canonical_cnot(),
        "simulated-cnot": canonical_cnot(),
        "z1-pi2": np.kron(np.diag([1, np.exp(1j * np.pi / 2)]), np.eye(2)),
        "z2-pi2": np.kron(np.eye(2), np.diag([1, np.exp(1j * np.pi / 2)])),
    }
    r_ideal = ptm_of_unitary(ideals[gate_name])
    fg = process_fidelity(r_rec, r_ideal)
    results = {
        "gate": gate_name,
        "process_fidelity": fg,
        "tp_residual": r_rec.tp_residual(),
        "cp_min_eigenvalue": r_rec.cp_min_eigenvalue(),
    }
    files.append(
        _write_json(outdir / "qpt_ptm.json", {**results, "ptm": r_rec.r.tolist()})
    )
    if cfg.figures:
        from .figures import render_ptm_pair

        files.append(
            render_ptm_pair(r_rec.r, r_ideal.r, outdir / "qpt_ptm.png",
                            f"{gate_name}: F_g = {fg:.4f}")
        )
    return results, files


def _exp_cnot_fidelity(cfg: ExperimentConfig, rng, outdir: Path):
    spec = _prepared_device(cfg)
    files: list = []
    cal = _calibration(cfg, spec, outdir, files)
    gate = compose_cnot(spec, cal, with_noise=cfg.noise)
    model = _model(cfg)
    record = run_qpt(gate, model, rng=rng)
    files.append(outdir / "qpt_record.csv")
    record.to_csv(files[-1])
    r_rec = reconstruct_ptm_mle(record, model)
    r_ideal = ptm_of_unitary(canonical_cnot())
    fg = process_fidelity(r_rec, r_ideal)
    results = {
        "noise": cfg.noise,
        "duration_ns": gate.duration,
        "process_fidelity": fg,
        "mean_leakage": float(np.mean(gate.leakage)) if gate.leakage is not None else 0.0,
    }
    files.append(_write_json(outdir / "cnot_fidelity.json", {**results, "ptm": r_rec.r.tolist()}))
    if cfg.figures:
        from .figures import render_ptm_pair

        files.append(
            render_ptm_pair(r_rec.r, r_ideal.r, outdir / "cnot_ptm.png",
                            f"composed cNOT: F_g = {fg:.4f}")
        )
    return results, files


def _exp_dj(cfg: ExperimentConfig, rng, outdir: Path):
    from .dj import ideal_dj_output, run_dj
    from .linalg import state_fidelity as fid_fn

    spec = _prepared_device(cfg)
    files: list = []
    cnot_kind = cfg.getstr("cnot", "ideal")
    if cnot_kind == "ideal":
        cnot = unitary_channel(canonical_cnot())
    elif cnot_kind == "simulated":
        cal = _calibration(cfg, spec, outdir, files)
        cnot = compose_cnot(spec, cal, with_noise=cfg.noise)
    else:
        raise ConfigParse(f"unknown cnot kind {cnot_kind!r}")
    summary = {}
    for i in range(4):
        rho, cls = run_dj(i, cnot)
        ideal = ideal_dj_output(i)
        f = fid_fn(ideal, rho)
        summary[f"f{i}"] = {"classification": cls, "output_fidelity": f}
        files.append(
            _write_csv(
                outdir / f"dj_oracle{i}_real.csv",
                ["row", "c0", "c1", "c2", "c3"],
                [(k, *np.real(rho.data[k]).tolist()) for k in range(4)],
            )
        )
        files.append(
            _write_csv(
                outdir / f"dj_oracle{i}_imag.csv",
                ["row", "c0", "c1", "c2", "c3"],
                [(k, *np.imag(rho.data[k]).tolist()) for k in range(4)],
            )
        )
        if cfg.figures:
            from .figures import render_density_matrix

            files.append(
                render_density_matrix(rho.data, outdir / f"dj_oracle{i}.png",
                                      f"oracle f{i}: {cls}, fidelity {f:.3f}")
            )
    correct = all(
        summary[f"f{i}"]["classification"] == kind
        for i, kind in enumerate(["constant", "constant", "balanced", "balanced"])
    )
    results = {"oracles": summary, "all_correct": correct}
    files.append(_write_json(outdir / "dj_summary.json", results))
    return results, files


_RUNNERS = {
    "spectroscopy": _exp_spectroscopy,
    "stark-ramsey": _exp_stark_ramsey,
    "calibrate-zgate": _exp_calibrate_zgate,
    "calibrate-map-phases": _exp_calibrate_map_phases,
    "qst": _exp_qst,
    "qpt": _exp_qpt,
    "cnot-fidelity": _exp_cnot_fidelity,
    "dj": _exp_dj,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> int:
    """Run one named experiment end to end; returns the exit status.

    0 on success, 1 for config problems, 2 for simulation failures, 3 for
    reconstruction failures. On success a manifest listing inputs, seed and
    produced artifacts is written next to the outputs.
    """
    try:
        if name not in _RUNNERS:
            raise UnknownExperiment(f"{name!r} (choose from {', '.join(EXPERIMENTS)})")
        outdir = Path(cfg.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(cfg.rng_seed)
        results, files = _RUNNERS[name](cfg, rng, outdir)
    except (ConfigParse, UnknownExperiment) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OptimizerFailed as exc:
        print(f"reconstruction error: {exc}", file=sys.stderr)
        return 3
    except MapgateError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "tool": f"mapgate {__version__}",
        "experiment": name,
        "rng_seed": cfg.rng_seed,
        "noise": cfg.noise,
        "shots": cfg.shots,
        "config": cfg.source,
        "results": results,
        "artifacts": sorted(str(Path(f).name) for f in files),
    }
    _write_json(outdir / "manifest.json", manifest)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mapgate",
        description="Two-transmon conditional-gate simulator and tomography toolkit",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--config", required=True, help="experiment config file (INI)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    args = parser.parse_args(argv)

    try:
        cfg = ExperimentConfig.load(args.config, args.experiment)
        if args.seed is not None:
            cfg.rng_seed = args.seed
        if args.out is not None:
            cfg.output_dir = Path(args.out)
        if args.no_figures:
            cfg.figures = False
    except (ConfigParse, UnknownExperiment) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run_experiment(args.experiment, cfg)


if __name__ == "__main__":
    sys.exit(main())
