import numpy as np
import pytest

from mapgate.calibration import build_map_calibration
from mapgate.device import calibrate_coupling, default_device_spec
from mapgate.gates import calibrate_z_phase_map


@pytest.fixture(scope="session")
def spec():
    """Device with the exchange coupling calibrated to the 15 MHz splitting."""
    return calibrate_coupling(default_device_spec(), 15.0)


@pytest.fixture(scope="session")
def map_cal(spec):
    """Full conditional-gate calibration (tuned tone, t_g, Z compensations)."""
    return build_map_calibration(spec)


@pytest.fixture(scope="session")
def phase_map_400():
    return calibrate_z_phase_map(400.0)


@pytest.fixture(scope="session")
def phase_map_300():
    return calibrate_z_phase_map(300.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
