"""Exception types raised across the simulator."""


class MapgateError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MapgateError):
    """Operands act on incompatible Hilbert spaces."""


class NonHermitianInput(MapgateError):
    """A Hermitian matrix was required but not supplied."""


class NonUnitaryInput(MapgateError):
    """A unitary matrix was required but not supplied."""


class BadSubsystemIndex(MapgateError):
    """Subsystem index outside the registered tensor factors."""


class InvalidSpec(MapgateError):
    """Device parameter set violates its invariants."""


class NoCrossingInRange(MapgateError):
    """Level-alignment scan grid never crosses the bare degeneracy."""


class CalibrationDiverged(MapgateError):
    """Iterative calibration failed to converge."""


class OutOfWindow(MapgateError):
    """Time argument outside a pulse's support window."""


class NonConvergedStep(MapgateError):
    """Time step too coarse: halving it changes the propagator too much."""


class UnalignedDevice(MapgateError):
    """Device is not at its level-alignment operating point."""


class FitFailed(MapgateError):
    """Curve fit did not converge or left large residuals."""


class DegenerateFrequencies(MapgateError):
    """Two fitted fringe frequencies coincide; no conditionality."""


class OptimizerFailed(MapgateError):
    """Maximum-likelihood reconstruction broke down numerically."""


class BadIndex(MapgateError):
    """Oracle index outside 0..3."""


class UnknownExperiment(MapgateError):
    """Experiment name not registered with the orchestrator."""


class ConfigParse(MapgateError):
    """Config file missing, malformed, or missing required keys."""
