"""Experiment configuration files.

One INI file per run: an [experiment] section with the device/calibration
references, seed, noise and shot settings, plus one section per experiment
holding its parameter block. All physical quantities carry explicit unit
suffixes in their key names.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .device import DeviceSpec
from .errors import ConfigParse
from .gates import MapCalibration

__all__ = ["ExperimentConfig", "write_default_config"]


@dataclass
class ExperimentConfig:
    """Resolved configuration for one orchestrated run."""

    device: DeviceSpec
    noise: bool = False
    shots: int = 0
    rng_seed: int = 0
    output_dir: Path = Path("out")
    figures: bool = True
    calibration: MapCalibration | None = None
    params: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)   # resolved key-value copy

    @classmethod
    def load(cls, path: str | Path, experiment: str) -> "ExperimentConfig":
        path = Path(path)
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ConfigParse(f"cannot read config file {path}")
        if "experiment" not in cp:
            raise ConfigParse(f"missing [experiment] section in {path}")
        exp = cp["experiment"]
        try:
            noise = exp.get("noise", "off").strip().lower()
            if noise not in ("on", "off"):
                raise ConfigParse(f"noise must be 'on' or 'off', got {noise!r}")
            device_ref = exp.get("device_config", fallback=None)
            if device_ref:
                device = DeviceSpec.from_config((path.parent / device_ref).resolve())
            else:
                device = DeviceSpec()
            cal = None
            cal_ref = exp.get("calibration_config", fallback=None)
            if cal_ref:
                cal = MapCalibration.from_config((path.parent / cal_ref).resolve())
            params = dict(cp[experiment]) if experiment in cp else {}
            source = {s: dict(cp[s]) for s in cp.sections()}
            return cls(
                device=device,
                noise=(noise == "on"),
                shots=exp.getint("shots", fallback=0),
                rng_seed=exp.getint("rng_seed", fallback=0),
                figures=exp.getboolean("figures", fallback=True),
                calibration=cal,
                params=params,
                source=source,
            )
        except ConfigParse:
            raise
        except Exception as exc:
            raise ConfigParse(f"bad config {path}: {exc}") from exc

    def getfloat(self, key: str, default: float) -> float:
        try:
            return float(self.params.get(key, default))
        except ValueError as exc:
            raise ConfigParse(f"bad float for {key}: {self.params[key]!r}") from exc

    def getint(self, key: str, default: int) -> int:
        try:
            return int(self.params.get(key, default))
        except ValueError as exc:
            raise ConfigParse(f"bad int for {key}: {self.params[key]!r}") from exc

    def getstr(self, key: str, default: str) -> str:
        return str(self.params.get(key, default))


def write_default_config(path: str | Path, experiment: str) -> None:
    """Emit a commented starter config for the given experiment."""
    defaults = {
        "spectroscopy": {
            "flux_min_mhz": "5", "flux_max_mhz": "55", "flux_steps": "101",
            "probe_min_ghz": "5.60", "probe_max_ghz": "5.72", "probe_steps": "241",
            "linewidth_mhz": "1.0",
        },
        "stark-ramsey": {
            "delay_max_ns": "2400", "delay_step_ns": "8",
            "target_beat_mhz": "0.467",
            "acquisition_rise_fall_ns": "60",
        },
        "calibrate-zgate": {
            "pulse_length_ns": "400",
            "detuning_min_mhz": "-5", "detuning_max_mhz": "5", "detuning_steps": "21",
        },
        "calibrate-map-phases": {
            "detuning_min_mhz": "-6", "detuning_max_mhz": "6", "detuning_steps": "49",
        },
        "qst": {"state": "bell", "gate": "none"},
        "qpt": {"gate": "ideal-cnot", "z_pulse_length_ns": "300"},
        "cnot-fidelity": {},
        "dj": {"cnot": "ideal"},
    }
    if experiment not in defaults:
        from .errors import UnknownExperiment

        raise UnknownExperiment(experiment)
    cp = configparser.ConfigParser()
    cp["experiment"] = {
        "rng_seed": "1",
        "noise": "off",
        "shots": "0",
        "figures": "on",
    }
    cp[experiment] = defaults[experiment]
    with open(path, "w") as fh:
        fh.write("# Unit suffixes are part of the key names.\n")
        cp.write(fh)
