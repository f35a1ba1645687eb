"""Pulse-level simulator and tomography toolkit for a microwave-activated
cNOT gate on two coupled transmons."""

__version__ = "0.1.0"

from .constants import TOL, Tolerances
from .linalg import (
    DensityMatrix,
    Operator,
    PauliVector,
    kron,
    partial_trace,
    pauli_assemble,
    pauli_vector,
    propagator,
    state_fidelity,
)
from .device import (
    AlignmentResult,
    DeviceSpec,
    build_hamiltonian,
    calibrate_coupling,
    default_device_spec,
    level_alignment_scan,
    three_tone_spectrum,
)
from .ptm import PauliTransferMatrix, process_fidelity, ptm_of_unitary
from .pulse import Drive, NoiseSpec, SechPulse, StarkTone, evolve_lindblad, evolve_unitary
from .gates import (
    GateChannel,
    MapCalibration,
    ZPhaseMap,
    calibrate_z_phase_map,
    canonical_cnot,
    compose_cnot,
    ideal_map_unitary,
    simulate_map_gate,
    z_phase_gate,
)
from .tomography import (
    MeasurementRecord,
    ReadoutModel,
    prepulse_set,
    readout_expectation,
    reconstruct_ptm_mle,
    reconstruct_state_mle,
    run_qpt,
    run_qst,
)
from .calibration import (
    PhaseSweep,
    RamseyTrace,
    build_map_calibration,
    find_tg,
    stark_ramsey,
    sweep_delta1,
    sweep_delta2,
    tune_stark_tone,
    verify_cancellation,
)
from .dj import OracleIndex, encoding_unitary, run_dj

__all__ = [
    "TOL",
    "Tolerances",
    "Operator",
    "DensityMatrix",
    "PauliVector",
    "kron",
    "propagator",
    "partial_trace",
    "state_fidelity",
    "pauli_vector",
    "pauli_assemble",
    "DeviceSpec",
    "AlignmentResult",
    "default_device_spec",
    "build_hamiltonian",
    "level_alignment_scan",
    "calibrate_coupling",
    "three_tone_spectrum",
    "PauliTransferMatrix",
    "ptm_of_unitary",
    "process_fidelity",
    "Drive",
    "NoiseSpec",
    "SechPulse",
    "StarkTone",
    "evolve_unitary",
    "evolve_lindblad",
    "GateChannel",
    "MapCalibration",
    "ZPhaseMap",
    "calibrate_z_phase_map",
    "canonical_cnot",
    "compose_cnot",
    "ideal_map_unitary",
    "simulate_map_gate",
    "z_phase_gate",
    "MeasurementRecord",
    "ReadoutModel",
    "prepulse_set",
    "readout_expectation",
    "reconstruct_state_mle",
    "reconstruct_ptm_mle",
    "run_qst",
    "run_qpt",
    "PhaseSweep",
    "RamseyTrace",
    "build_map_calibration",
    "find_tg",
    "stark_ramsey",
    "sweep_delta1",
    "sweep_delta2",
    "tune_stark_tone",
    "verify_cancellation",
    "OracleIndex",
    "encoding_unitary",
    "run_dj",
]
