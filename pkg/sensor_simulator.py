#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Sensor Simulator Module for stretchmetrics
Generates synthetic resistance/tensile logs with known ground truth
Implements tools: midline, simulate_cyclic, simulate_failure, simulate_motion
"""
import json
import math
from dataclasses import dataclass, asdict, fields
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.exceptions import ConfigurationError, ValidationError, FileNotFoundError as CustomFileNotFoundError
from core.logging_config import get_logger
from angle_calibrator import AngleModel, AngleTrace
from data_parser import ResistanceTrace, TensileTrace

logger = get_logger(__name__)

FAIL_MODES = ('mechanical', 'electrical')
AMPLITUDE_REFERENCES = ('mean', 'first')
FAILURE_FORCE_FRACTION = 0.05


def solve_delta_max(gf: float, peak_strain: float, hysteresis_pct: float) -> float:
    """
    Loop half-width coefficient giving ``hysteresis_pct`` (area-ratio form)
    for a drift-free lens loop around the linear midline ``gf * strain``.
    """
    if not 0 <= hysteresis_pct < 200:
        raise ValidationError('hysteresis_pct', f"must be in [0, 200), got {hysteresis_pct}")
    return 3.0 * hysteresis_pct * gf * peak_strain / (2.0 * (400.0 - 2.0 * hysteresis_pct))


DEFAULT_GF = 31.42
DEFAULT_PEAK_STRAIN = 0.5
DEFAULT_HYSTERESIS_PCT = 22.9
DEFAULT_DELTA_MAX = solve_delta_max(DEFAULT_GF, DEFAULT_PEAK_STRAIN, DEFAULT_HYSTERESIS_PCT)


@dataclass(frozen=True)
class SensorParams:
    """Ground-truth sensor behaviour."""
    r0: float = 2.5e6
    gf: float = DEFAULT_GF
    delta_max: float = DEFAULT_DELTA_MAX
    baseline_drift: float = 0.00135
    peak_drift: float = 0.00236
    eps_linear_end: float = 0.60
    gf_saturated: float = -2.0
    eps_fail: float = 1.20
    fail_mode: str = 'mechanical'
    noise_sigma: float = 0.0
    seed: int = 0
    amplitude_reference: str = 'mean'
    force_at_linear_end: float = 15.0
    force_exponent: float = 1.5

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValidationError('r0', f"must be > 0, got {self.r0}")
        if not self.gf > 0:
            raise ValidationError('gf', f"must be > 0, got {self.gf}")
        if not 0 < self.eps_linear_end <= self.eps_fail:
            raise ValidationError(
                'eps_linear_end',
                f"must satisfy 0 < eps_linear_end <= eps_fail, got {self.eps_linear_end} (eps_fail {self.eps_fail})"
            )
        if self.noise_sigma < 0:
            raise ValidationError('noise_sigma', f"must be >= 0, got {self.noise_sigma}")
        if self.delta_max < 0:
            raise ValidationError('delta_max', f"must be >= 0, got {self.delta_max}")
        if self.fail_mode not in FAIL_MODES:
            raise ValidationError('fail_mode', f"must be one of {FAIL_MODES}, got '{self.fail_mode}'")
        if self.amplitude_reference not in AMPLITUDE_REFERENCES:
            raise ValidationError(
                'amplitude_reference',
                f"must be one of {AMPLITUDE_REFERENCES}, got '{self.amplitude_reference}'"
            )
        if not self.force_at_linear_end > 0:
            raise ValidationError('force_at_linear_end', f"must be > 0, got {self.force_at_linear_end}")
        if not self.force_exponent > 0:
            raise ValidationError('force_exponent', f"must be > 0, got {self.force_exponent}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError('seed', f"must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class ProtocolParams:
    """Tensile protocol: cyclic amplitude, crosshead speed and sampling."""
    peak_strain: float = DEFAULT_PEAK_STRAIN
    n_cycles: int = 80
    crosshead_rate: float = 60.0
    gauge_length: float = 100.0
    sample_rate: float = 10.0
    rest_duration: float = 5.0
    failure_overshoot: float = 0.05

    def __post_init__(self):
        for name in ('peak_strain', 'n_cycles', 'crosshead_rate', 'gauge_length', 'sample_rate', 'failure_overshoot'):
            if not getattr(self, name) > 0:
                raise ValidationError(name, f"must be > 0, got {getattr(self, name)}")
        if self.rest_duration < 0:
            raise ValidationError('rest_duration', f"must be >= 0, got {self.rest_duration}")
        if isinstance(self.n_cycles, bool) or not isinstance(self.n_cycles, int):
            raise ValidationError('n_cycles', f"must be an integer, got {self.n_cycles!r}")

    @property
    def strain_rate(self) -> float:
        """Strain per second."""
        return self.crosshead_rate / 60.0 / self.gauge_length

    @property
    def period(self) -> float:
        """Seconds per loading-unloading cycle."""
        return 2.0 * self.peak_strain / self.strain_rate


@dataclass(frozen=True)
class MotionParams:
    """
    Joint-motion session: raised-cosine flexion between rest and peak angle,
    mapped to strain through a generating calibration line.

    ``hysteresis_scale`` scales the sensor's loop half-width during motion
    (0 = static midline only).
    """
    duration: float = 30.0
    sample_rate: float = 10.0
    rest_duration: float = 5.0
    rest_angle: float = 10.0
    peak_angle: float = 120.0
    period: float = 6.0
    model_slope: float = 8.0
    model_intercept: float = 10.0
    hysteresis_scale: float = 0.0
    n_calibration_points: int = 7
    joint: str = 'elbow'

    def __post_init__(self):
        for name in ('duration', 'sample_rate', 'period'):
            if not getattr(self, name) > 0:
                raise ValidationError(name, f"must be > 0, got {getattr(self, name)}")
        if self.rest_duration < 0:
            raise ValidationError('rest_duration', f"must be >= 0, got {self.rest_duration}")
        if not 0 <= self.rest_angle <= self.peak_angle <= 180:
            raise ValidationError(
                'peak_angle',
                f"must satisfy 0 <= rest_angle <= peak_angle <= 180, got {self.rest_angle}, {self.peak_angle}"
            )
        if self.model_slope == 0:
            raise ValidationError('model_slope', "must be nonzero")
        if self.hysteresis_scale < 0:
            raise ValidationError('hysteresis_scale', f"must be >= 0, got {self.hysteresis_scale}")
        if self.n_calibration_points < 2:
            raise ValidationError('n_calibration_points', f"must be >= 2, got {self.n_calibration_points}")

    @property
    def model(self) -> AngleModel:
        """Generating calibration line (angle as a function of dR/R)."""
        return AngleModel(slope=self.model_slope, intercept=self.model_intercept, fit_r2=1.0, joint=self.joint)


# ============================================================================
# Tool: midline
# ============================================================================

def midline(params: SensorParams, strain) -> np.ndarray:
    """
    Hysteresis-free dR/R: ``gf * strain`` up to eps_linear_end, then a
    continuous line of slope ``gf_saturated``.
    """
    strain = np.asarray(strain, dtype=float)
    knee = params.gf * params.eps_linear_end
    return np.where(
        strain <= params.eps_linear_end,
        params.gf * strain,
        knee + params.gf_saturated * (strain - params.eps_linear_end)
    )


def loop_half_width(delta_max: float, strain, peak_strain: float) -> np.ndarray:
    """delta(strain) = 4 * delta_max * u * (1 - u), u = strain / peak_strain."""
    u = np.asarray(strain, dtype=float) / peak_strain
    return 4.0 * delta_max * u * (1.0 - u)


def force_law(params: SensorParams, strain) -> np.ndarray:
    """Tensile force: force_at_linear_end * (strain / eps_linear_end) ** force_exponent."""
    ratio = np.maximum(np.asarray(strain, dtype=float), 0.0) / params.eps_linear_end
    return params.force_at_linear_end * ratio ** params.force_exponent


def _add_noise(resistance: np.ndarray, params: SensorParams, rng: np.random.Generator) -> np.ndarray:
    if params.noise_sigma > 0:
        resistance = resistance + rng.normal(0.0, params.noise_sigma * params.r0, resistance.size)
    if np.any(resistance <= 0):
        raise ValidationError('noise_sigma', "simulated resistance dropped to <= 0; reduce noise or saturation")
    return resistance


# ============================================================================
# Tool: simulate_cyclic
# ============================================================================

def cycle_amplitudes(params: SensorParams, proto: ProtocolParams) -> np.ndarray:
    """
    Relative loop amplitude a_k = A_k / r0 for every cycle.

    Both references place the cycle-k peak at P0 * (1 + peak_drift * k).
    ``first`` takes P0 as the drift-free peak so a_0 = 1; ``mean`` picks the
    affine law whose cycle average is 1.
    """
    n = proto.n_cycles
    k = np.arange(n, dtype=float)
    v_peak = float(midline(params, proto.peak_strain))
    if not v_peak > 0:
        raise ValidationError('peak_strain', "midline at the peak strain must be positive")
    bd, pd = params.baseline_drift, params.peak_drift

    if params.amplitude_reference == 'first':
        a = ((1.0 + v_peak) * (1.0 + pd * k) - (1.0 + bd * k)) / v_peak
    else:
        m = (n - 1) / 2.0
        beta = (pd * (1.0 + v_peak) - bd) / (v_peak * (1.0 + m * pd))
        alpha = 1.0 - beta * m
        a = alpha + beta * k

    if np.any(a <= 0):
        raise ValidationError('peak_drift', "drift rates make a cycle amplitude non-positive")
    return a


def _triangle(proto: ProtocolParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sample times, strain, cycle index and loading flag of the cyclic protocol."""
    fs = proto.sample_rate
    n_rest = int(round(proto.rest_duration * fs))
    per_cycle = proto.period * fs
    n_active = int(round(proto.n_cycles * per_cycle))

    j = np.arange(-n_rest, n_active + 1, dtype=float)
    t = (j + n_rest) / fs

    k = np.clip(np.ceil(j / per_cycle) - 1, 0, proto.n_cycles - 1)
    phase = np.clip(j - k * per_cycle, 0.0, None)
    strain = proto.peak_strain * (1.0 - np.abs(2.0 * phase / per_cycle - 1.0))
    strain[j < 0] = 0.0
    loading = phase <= per_cycle / 2.0
    return t, strain, k.astype(int), loading


def simulate_cyclic(params: SensorParams, proto: ProtocolParams) -> Tuple[ResistanceTrace, TensileTrace]:
    """
    Cyclic test: triangular strain wave after a zero-strain rest.

    Per cycle k the branch value is midline +/- delta (loading above
    unloading) and R = r0 * (1 + baseline_drift * k) + A_k * branch, plus
    Gaussian noise of std ``noise_sigma * r0``.

    Raises:
        ValidationError: If the protocol exceeds the failure strain or the
            drift rates give a non-positive amplitude
    """
    if proto.peak_strain > params.eps_fail:
        raise ValidationError('peak_strain', f"{proto.peak_strain} exceeds eps_fail {params.eps_fail}")

    rng = np.random.default_rng(params.seed)
    t, strain, k, loading = _triangle(proto)
    a = cycle_amplitudes(params, proto)

    half_width = loop_half_width(params.delta_max, strain, proto.peak_strain)
    branch = midline(params, strain) + np.where(loading, half_width, -half_width)
    baseline = params.r0 * (1.0 + params.baseline_drift * k)
    resistance = _add_noise(baseline + params.r0 * a[k] * branch, params, rng)

    displacement = strain * proto.gauge_length
    r_trace = ResistanceTrace(t=t, r=resistance)
    ten_trace = TensileTrace(t=t, displacement=displacement, force=force_law(params, strain))

    logger.info(f"Simulated {proto.n_cycles} cycles, {len(t)} samples "
                f"(period {proto.period:g} s, seed {params.seed})")
    return r_trace, ten_trace


# ============================================================================
# Tool: simulate_failure
# ============================================================================

def simulate_failure(params: SensorParams, proto: ProtocolParams) -> Tuple[ResistanceTrace, TensileTrace]:
    """
    Stretch-to-failure test: monotonic ramp at the crosshead rate.

    At the first sample with strain >= eps_fail a mechanical failure drops
    the force to 5% of its running maximum; an electrical failure makes the
    meter report open circuit from that sample on. The ramp continues
    ``failure_overshoot`` past eps_fail.
    """
    rng = np.random.default_rng(params.seed)
    fs = proto.sample_rate
    n_rest = int(round(proto.rest_duration * fs))
    step = proto.strain_rate / fs
    n_ramp = int(math.ceil((params.eps_fail + proto.failure_overshoot) / step))
    fail_j = int(math.ceil(params.eps_fail / step - 1e-9))

    j = np.arange(-n_rest, n_ramp + 1)
    t = (j + n_rest) / fs
    strain = np.maximum(j, 0) * proto.strain_rate / fs
    failed = j >= fail_j

    force = force_law(params, strain)
    resistance = _add_noise(params.r0 * (1.0 + midline(params, strain)), params, rng)
    open_circuit = np.zeros(t.size, dtype=bool)

    if params.fail_mode == 'mechanical':
        running_max = np.maximum.accumulate(np.where(failed, 0.0, force))
        force = np.where(failed, FAILURE_FORCE_FRACTION * running_max, force)
    else:
        open_circuit = failed
        resistance = np.where(failed, np.inf, resistance)

    r_trace = ResistanceTrace(t=t, r=resistance, open_circuit=open_circuit)
    ten_trace = TensileTrace(t=t, displacement=strain * proto.gauge_length, force=force)

    logger.info(f"Simulated {params.fail_mode} failure at strain {fail_j * step:.4f}, {len(t)} samples")
    return r_trace, ten_trace


# ============================================================================
# Tool: simulate_motion
# ============================================================================

def generate_motion(motion: MotionParams) -> AngleTrace:
    """Raised-cosine flexion cycles after a rest at ``rest_angle``."""
    fs = motion.sample_rate
    n_rest = int(round(motion.rest_duration * fs))
    n_total = n_rest + int(round(motion.duration * fs))
    t = np.arange(n_total + 1) / fs
    tau = np.maximum(t - n_rest / fs, 0.0)
    swing = (1.0 - np.cos(2.0 * np.pi * tau / motion.period)) / 2.0
    angle = motion.rest_angle + (motion.peak_angle - motion.rest_angle) * swing
    return AngleTrace(t=t, angle=angle)


def strain_for_angle(params: SensorParams, model: AngleModel, angle) -> np.ndarray:
    """Strain the generating line implies for ``angle`` (linear sensor region)."""
    return np.maximum(model.inverse(angle) / params.gf, 0.0)


def simulate_motion(
    params: SensorParams,
    motion: AngleTrace,
    model: AngleModel,
    hysteresis_scale: float = 0.0
) -> ResistanceTrace:
    """
    Sensor response to a joint-angle trace.

    Strain comes from inverting ``model`` and the linear gauge factor; the
    response follows the sensor midline, so angles beyond the linear range
    read low. The loop half-width (scaled by ``hysteresis_scale``) is added
    while flexing and subtracted while extending.
    """
    rng = np.random.default_rng(params.seed)
    strain = strain_for_angle(params, model, motion.angle)

    drr = midline(params, strain)
    peak = float(strain.max())
    if hysteresis_scale > 0 and peak > 0:
        direction = np.where(np.diff(motion.angle, prepend=motion.angle[0]) >= 0, 1.0, -1.0)
        drr = drr + direction * loop_half_width(hysteresis_scale * params.delta_max, strain, peak)

    resistance = _add_noise(params.r0 * (1.0 + drr), params, rng)
    logger.info(f"Simulated motion: {len(motion)} samples, peak strain {peak:.4f}")
    return ResistanceTrace(t=motion.t, r=resistance)


def calibration_points(params: SensorParams, motion: MotionParams) -> np.ndarray:
    """Static (dR/R, angle) points at evenly spaced angles from rest to peak."""
    rng = np.random.default_rng(params.seed + 1)
    angles = np.linspace(motion.rest_angle, motion.peak_angle, motion.n_calibration_points)
    drr = midline(params, strain_for_angle(params, motion.model, angles))
    if params.noise_sigma > 0:
        drr = drr + rng.normal(0.0, params.noise_sigma, drr.size)
    return np.column_stack((drr, angles))


# ============================================================================
# Ground truth
# ============================================================================

def expected_cyclic_metrics(params: SensorParams, proto: ProtocolParams) -> Dict[str, Any]:
    """Closed-form metrics of a noiseless cyclic simulation (area-ratio hysteresis, OLS drift)."""
    a = cycle_amplitudes(params, proto)
    k = np.arange(proto.n_cycles, dtype=float)
    eps = proto.peak_strain
    linear_peak = eps <= params.eps_linear_end

    lens = (4.0 / 3.0) * params.delta_max * eps
    loading_area = params.baseline_drift * k * eps + a * (params.gf * eps ** 2 / 2.0 + (2.0 / 3.0) * params.delta_max * eps)
    hysteresis = 100.0 * a * lens / loading_area

    return {
        'gauge_factor': float(params.gf * a.mean()) if linear_peak else None,
        'linearity_r2': 1.0 if linear_peak else None,
        'hysteresis_pct': float(hysteresis.mean()) if linear_peak else None,
        'baseline_drift_pct_per_cycle': 100.0 * params.baseline_drift,
        'peak_drift_pct_per_cycle': 100.0 * params.peak_drift,
        'n_cycles': proto.n_cycles
    }


def expected_failure_metrics(params: SensorParams, proto: ProtocolParams) -> Dict[str, Any]:
    step = proto.strain_rate / proto.sample_rate
    fail_j = int(math.ceil(params.eps_fail / step - 1e-9))
    return {
        'failure_strain': fail_j * step,
        'failure_mode': params.fail_mode,
        'linear_range_end': params.eps_linear_end,
        'force_at_linear_end': float(force_law(params, params.eps_linear_end))
    }


def expected_motion_metrics(params: SensorParams, motion: MotionParams) -> Dict[str, Any]:
    model = motion.model
    return {
        'model_slope': model.slope,
        'model_intercept': model.intercept,
        'linear_max_angle_deg': float(model.angle(params.gf * params.eps_linear_end))
    }


def ground_truth(
    kind: str,
    params: SensorParams,
    proto: Optional[ProtocolParams] = None,
    motion: Optional[MotionParams] = None
) -> Dict[str, Any]:
    """Sidecar document: programmed parameters plus the expected analysis outcome."""
    document: Dict[str, Any] = {'kind': kind, 'sensor': asdict(params)}
    if kind == 'cyclic':
        document['protocol'] = asdict(proto)
        document['expected'] = expected_cyclic_metrics(params, proto)
    elif kind == 'failure':
        document['protocol'] = asdict(proto)
        document['expected'] = expected_failure_metrics(params, proto)
    elif kind == 'motion':
        document['motion'] = asdict(motion)
        document['expected'] = expected_motion_metrics(params, motion)
    else:
        raise ValidationError('kind', f"must be cyclic, failure or motion, got '{kind}'")
    return document


def write_ground_truth(document: Dict[str, Any], path: str) -> str:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(document, indent=2, allow_nan=False) + '\n')
    return path


# ============================================================================
# Parameter files
# ============================================================================

def _build(cls, section: Dict[str, Any], overrides: Dict[str, Any]):
    known = {f.name for f in fields(cls)}
    values = dict(section or {})
    values.update(overrides)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValidationError(unknown[0], f"unknown {cls.__name__} field")
    try:
        return cls(**values)
    except TypeError as e:
        raise ValidationError(cls.__name__, str(e))


def load_sim_params(
    path: Optional[str] = None,
    seed: Optional[int] = None
) -> Tuple[SensorParams, ProtocolParams, MotionParams]:
    """
    Read simulator parameters from a JSON file with optional ``sensor``,
    ``protocol`` and ``motion`` sections; missing fields keep their defaults.

    Args:
        path: JSON file (None = all defaults)
        seed: Overrides ``sensor.seed`` when given

    Raises:
        FileNotFoundError: If ``path`` does not exist
        ConfigurationError: If the file is not a JSON object
        ValidationError: On an unknown or out-of-range field
    """
    document: Dict[str, Any] = {}
    if path:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                document = json.load(f)
        except OSError:
            raise CustomFileNotFoundError(path)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigurationError(f"Invalid params JSON: {e}", path)
        if not isinstance(document, dict):
            raise ConfigurationError("Params JSON must be an object", path)
        unknown = sorted(set(document) - {'sensor', 'protocol', 'motion'})
        if unknown:
            raise ValidationError(unknown[0], "unknown params section")

    sensor_overrides = {'seed': seed} if seed is not None else {}
    return (
        _build(SensorParams, document.get('sensor'), sensor_overrides),
        _build(ProtocolParams, document.get('protocol'), {}),
        _build(MotionParams, document.get('motion'), {})
    )
