"""
Pytest configuration and fixtures for stretchmetrics tests
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from core.config import ConfigManager
from data_parser import ResistanceTrace, TensileTrace, TestConfig
from data_synchronizer import SyncedTrace, synchronize
from sensor_simulator import ProtocolParams, SensorParams, simulate_cyclic


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture(autouse=True)
def clean_config_cache():
    """Every test starts without a cached config.yaml"""
    ConfigManager().clear_cache()
    yield
    ConfigManager().clear_cache()


@pytest.fixture
def write_file(temp_dir):
    """Write text to a file inside temp_dir and return its path as str"""
    def _write(name: str, text: str) -> str:
        path = temp_dir / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def sample_resistance_csv(write_file):
    """Small valid resistance log at 10 Hz"""
    return write_file('resistance.csv', "t_s,R_ohm\n0.0,2500000.0\n0.1,2600000.0\n0.2,2700000.0\n")


@pytest.fixture
def sample_tensile_csv(write_file):
    """Small valid tensile log, 1 mm/s crosshead"""
    return write_file('tensile.csv', "t_s,disp_mm,force_N\n0.0,0.0,0.0\n1.0,1.0,0.5\n2.0,2.0,1.1\n")


@pytest.fixture(scope='session')
def default_sensor():
    """Sensor parameters at their defaults (GF 31.42, H 22.9%, 0.135 and 0.236 %/cycle drifts)"""
    return SensorParams()


@pytest.fixture(scope='session')
def default_protocol():
    """80-cycle protocol at 60 mm/min, 10 Hz, 0.5 peak strain"""
    return ProtocolParams()


@pytest.fixture(scope='session')
def default_cyclic_trace(default_sensor, default_protocol) -> SyncedTrace:
    """Synced noiseless cyclic trace at the default parameters"""
    r_trace, ten_trace = simulate_cyclic(default_sensor, default_protocol)
    return synchronize(r_trace, ten_trace, TestConfig())


@pytest.fixture
def short_protocol():
    """Five-cycle protocol for quick pipeline tests"""
    return ProtocolParams(n_cycles=5)


def make_synced_trace(strain, drr, r0=1000.0, force=None, open_circuit=None, dt=0.1) -> SyncedTrace:
    """Build a SyncedTrace directly from arrays on a uniform timebase"""
    strain = np.asarray(strain, dtype=float)
    return SyncedTrace(
        t=np.arange(strain.size) * dt,
        d_r_over_r=np.asarray(drr, dtype=float),
        r0=r0,
        strain=strain,
        force=None if force is None else np.asarray(force, dtype=float),
        open_circuit=open_circuit
    )


def triangle_wave(n_periods: int, samples_per_half: int, peak: float = 0.5, lead: int = 0) -> np.ndarray:
    """Triangular strain wave starting and ending at zero, with optional zero lead-in"""
    up = np.linspace(0.0, peak, samples_per_half + 1)
    period = np.concatenate((up[:-1], up[::-1][:-1]))
    wave = np.concatenate([np.zeros(lead)] + [period] * n_periods + [np.zeros(1)])
    return wave


def resistance_trace(t, r) -> ResistanceTrace:
    return ResistanceTrace(t=np.asarray(t, dtype=float), r=np.asarray(r, dtype=float))


def tensile_trace(t, displacement, force=None) -> TensileTrace:
    t = np.asarray(t, dtype=float)
    force = np.zeros_like(t) if force is None else force
    return TensileTrace(t=t, displacement=np.asarray(displacement, dtype=float), force=np.asarray(force, dtype=float))


def lens_loop_trace(n_periods: int = 3, samples_per_half: int = 500, gf: float = 31.42,
                    delta_max: float = 0.0, peak: float = 0.5, r0: float = 1000.0) -> SyncedTrace:
    """
    Triangle-strain trace whose loading branch is gf*e + d(e) and unloading
    branch gf*e - d(e), with d(e) = 4*delta_max*u*(1-u), u = e/peak.
    """
    strain = triangle_wave(n_periods, samples_per_half, peak)
    u = strain / peak
    half_width = 4.0 * delta_max * u * (1.0 - u)
    rising = np.concatenate(([True], np.diff(strain) > 0))
    # peak samples belong to both branches and have zero half-width
    sign = np.where(rising, 1.0, -1.0)
    drr = gf * strain + sign * half_width
    return make_synced_trace(strain, drr, r0=r0)
