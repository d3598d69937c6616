#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Data Processor Module for stretchmetrics
Computes the sensor performance metrics (gauge factor, linearity, hysteresis,
drift) and the stretch-to-failure analysis
Implements tools: gauge_factor_and_linearity, hysteresis_percent, drift_rates,
failure_analysis, build_report
"""
import json
from dataclasses import dataclass, asdict
from enum import Enum
from functools import partial
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import linregress

from core.exceptions import (
    AnalysisError,
    DegenerateGridError,
    ZeroLoadingAreaError,
    TooFewCyclesError,
    NonPositiveInterceptError,
    MissingForceError,
    NonMonotonicStrainError,
    ValidationError
)
from core.logging_config import get_logger
from core.utils import map_in_order
from cycle_analyzer import (
    Cycle,
    CycleExtrema,
    MidpointCurve,
    DEFAULT_N_BINS,
    branch_grid,
    split_branches
)
from data_parser import OPEN_CIRCUIT_TOKEN
from data_synchronizer import SyncedTrace

logger = get_logger(__name__)

HYSTERESIS_METHODS = ('area_ratio', 'full_scale')
DRIFT_METHODS = ('ols', 'endpoint')

DEFAULT_FORCE_DROP_FRAC = 0.5
DEFAULT_FORCE_FLOOR = 0.5
DEFAULT_OPEN_RATIO = 100.0
DEFAULT_R2_FLOOR = 0.98
DEFAULT_LINEAR_GRID_START = 0.10
DEFAULT_LINEAR_GRID_STEP = 0.01
DEFAULT_SLOPE_TOLERANCE = 0.5

_STRAIN_TOL = 1e-9


class FailureMode(str, Enum):
    MECHANICAL = 'mechanical'
    ELECTRICAL = 'electrical'
    NONE = 'none'


class LineFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


class DriftRates(NamedTuple):
    baseline: float
    peak: float


@dataclass(frozen=True)
class MetricsReport:
    """Cyclic-test performance metrics."""
    gauge_factor: float
    linearity_r2: float
    hysteresis_pct: float
    baseline_drift_pct_per_cycle: float
    peak_drift_pct_per_cycle: float
    n_cycles: int

    def __post_init__(self):
        if not 0.0 <= self.linearity_r2 <= 1.0:
            raise ValidationError('linearity_r2', f"must be in [0, 1], got {self.linearity_r2}")
        if self.n_cycles < 1:
            raise ValidationError('n_cycles', f"must be >= 1, got {self.n_cycles}")
        if self.hysteresis_pct < 0:
            raise ValidationError('hysteresis_pct', f"must be >= 0, got {self.hysteresis_pct}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FailureReport:
    """Stretch-to-failure outcome."""
    failure_strain: float
    failure_mode: FailureMode
    linear_range_end: float
    max_force_in_linear_range: float

    def __post_init__(self):
        if not self.failure_strain > 0:
            raise ValidationError('failure_strain', f"must be > 0, got {self.failure_strain}")
        failed = self.failure_mode != FailureMode.NONE
        if failed and not 0 < self.linear_range_end <= self.failure_strain + _STRAIN_TOL:
            raise ValidationError(
                'linear_range_end',
                f"must lie in (0, {self.failure_strain}], got {self.linear_range_end}"
            )

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result['failure_mode'] = self.failure_mode.value
        return result


# ============================================================================
# Least squares
# ============================================================================

def fit_line(x: Sequence[float], y: Sequence[float], fit_intercept: bool = True) -> LineFit:
    """
    Ordinary least squares y = slope * x + intercept with R^2 = 1 - SS_res/SS_tot.

    When ``y`` is constant (SS_tot = 0) R^2 is 1 for an exact fit with a free
    intercept and 0 otherwise. R^2 is clipped to [0, 1].

    Raises:
        DegenerateGridError: If ``x`` has no spread or fewer than 2 points
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or float(np.ptp(x)) == 0.0:
        raise DegenerateGridError(f"need >= 2 points with distinct x, got {x.size}")

    if fit_intercept:
        result = linregress(x, y)
        slope, intercept = float(result.slope), float(result.intercept)
    else:
        slope, intercept = float(np.dot(x, y) / np.dot(x, x)), 0.0

    residuals = y - (slope * x + intercept)
    ss_res = float(np.dot(residuals, residuals))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    rounding = (np.finfo(float).eps * max(1.0, float(np.abs(y).max()))) ** 2 * y.size

    if ss_tot <= rounding:
        exact = ss_res <= rounding
        r2 = 1.0 if fit_intercept and exact else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot

    return LineFit(slope, intercept, float(np.clip(r2, 0.0, 1.0)))


# ============================================================================
# Tool: gauge_factor_and_linearity
# ============================================================================

def gauge_factor_and_linearity(mc: MidpointCurve, fit_intercept: bool = True) -> LineFit:
    """
    Gauge factor (slope) and R^2 of the midpoint curve against strain.

    Returns:
        LineFit whose ``slope`` is the gauge factor and ``r2`` the linearity

    Raises:
        DegenerateGridError: If the grid has < 3 points or no strain spread
    """
    if len(mc) < 3:
        raise DegenerateGridError(f"need >= 3 grid points, got {len(mc)}")
    fit = fit_line(mc.strain_grid, mc.mean_mid, fit_intercept)
    logger.info(f"Gauge factor {fit.slope:.4f}, R^2 {fit.r2:.4f}")
    return fit


# ============================================================================
# Tool: hysteresis_percent
# ============================================================================

def _cycle_hysteresis(trace: SyncedTrace, method: str, n_bins: int, c: Cycle) -> float:
    loading, unloading = split_branches(trace, c)

    if method == 'area_ratio':
        a_load = float(trapezoid(loading.d_r_over_r, loading.strain))
        a_unload = float(trapezoid(unloading.d_r_over_r, unloading.strain))
        if not a_load > 0:
            raise ZeroLoadingAreaError(f"cycle at sample {c.peak_idx} has loading area {a_load:.4g}")
        return 100.0 * abs(a_load - a_unload) / a_load

    grid = branch_grid([(loading, unloading)], n_bins)
    gap = np.abs(np.interp(grid, loading.strain, loading.d_r_over_r)
                 - np.interp(grid, unloading.strain, unloading.d_r_over_r))
    outputs = np.concatenate((loading.d_r_over_r, unloading.d_r_over_r))
    full_scale = float(outputs.max() - outputs.min())
    if not full_scale > 0:
        raise ZeroLoadingAreaError(f"cycle at sample {c.peak_idx} has zero output span")
    return 100.0 * float(gap.max()) / full_scale


def cycle_hysteresis(
    trace: SyncedTrace,
    cycles: Sequence[Cycle],
    method: str = 'area_ratio',
    n_bins: int = DEFAULT_N_BINS,
    use_multiprocessing: Optional[bool] = None
) -> List[float]:
    """Per-cycle hysteresis in percent, in cycle order."""
    if method not in HYSTERESIS_METHODS:
        raise ValidationError('hysteresis_method', f"must be one of {HYSTERESIS_METHODS}, got '{method}'")
    return map_in_order(partial(_cycle_hysteresis, trace, method, n_bins), list(cycles), use_multiprocessing)


def hysteresis_percent(
    trace: SyncedTrace,
    cycles: Sequence[Cycle],
    method: str = 'area_ratio',
    n_bins: int = DEFAULT_N_BINS,
    use_multiprocessing: Optional[bool] = None
) -> float:
    """
    Mean hysteresis over cycles.

    ``area_ratio``: per cycle 100 * |A_load - A_unload| / A_load, with the
    branch areas integrated trapezoidally over strain.
    ``full_scale``: per cycle 100 * max |L - U| / (output span), with both
    branches interpolated on a common grid of ``n_bins`` points.

    Raises:
        ZeroLoadingAreaError: If a loading area (or output span) is not positive
    """
    if not cycles:
        raise TooFewCyclesError("hysteresis needs at least one cycle")
    per_cycle = cycle_hysteresis(trace, cycles, method, n_bins, use_multiprocessing)
    result = float(np.mean(per_cycle))
    logger.info(f"Hysteresis ({method}) {result:.3f}% over {len(per_cycle)} cycles")
    return result


# ============================================================================
# Tool: drift_rates
# ============================================================================

def _drift(series: np.ndarray, method: str, label: str) -> float:
    if method == 'endpoint':
        first = float(series[0])
        if not first > 0:
            raise NonPositiveInterceptError(f"{label} series starts at {first:.6g}")
        return 100.0 * (float(series[-1]) - first) / ((series.size - 1) * first)

    fit = fit_line(np.arange(series.size, dtype=float), series)
    if not fit.intercept > 0:
        raise NonPositiveInterceptError(f"{label} fit intercept {fit.intercept:.6g} is not positive")
    return 100.0 * fit.slope / fit.intercept


def drift_rates(extrema: Sequence[CycleExtrema], method: str = 'ols') -> DriftRates:
    """
    Relative baseline and peak drift in percent per cycle.

    ``ols`` fits x(k) = b0 + b1*k over k = 0..n-1 and returns 100*b1/b0;
    ``endpoint`` returns 100*(x[n-1] - x[0]) / ((n-1)*x[0]).

    Raises:
        TooFewCyclesError: If fewer than 3 cycles are given
        NonPositiveInterceptError: If the normalising value is not positive
    """
    if method not in DRIFT_METHODS:
        raise ValidationError('drift_method', f"must be one of {DRIFT_METHODS}, got '{method}'")
    if len(extrema) < 3:
        raise TooFewCyclesError(f"drift needs at least 3 cycles, got {len(extrema)}")

    values = np.asarray(extrema, dtype=float)
    rates = DriftRates(
        baseline=_drift(values[:, 0], method, 'baseline'),
        peak=_drift(values[:, 1], method, 'peak')
    )
    logger.info(f"Drift ({method}): baseline {rates.baseline:.4f} %/cycle, peak {rates.peak:.4f} %/cycle")
    return rates


# ============================================================================
# Tool: failure_analysis
# ============================================================================

def _first_index(mask: np.ndarray) -> Optional[int]:
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def _linear_range_end(
    strain: np.ndarray,
    drr: np.ndarray,
    limit: float,
    r2_floor: float,
    grid_start: float,
    grid_step: float,
    slope_tolerance: float
) -> float:
    """
    Grow [0, e] from ``grid_start`` in ``grid_step`` increments while the
    cumulative fit keeps R^2 >= r2_floor and the newest step's slope stays
    above (1 - slope_tolerance) times the cumulative slope.
    """
    last_pass = None
    i = 0
    while True:
        end = round(grid_start + i * grid_step, 10)
        if end > limit + _STRAIN_TOL:
            break
        i += 1

        upto = strain <= end + _STRAIN_TOL
        if np.count_nonzero(upto) < 3 or float(np.ptp(strain[upto])) == 0.0:
            continue
        cumulative = fit_line(strain[upto], drr[upto])
        if cumulative.r2 < r2_floor:
            break

        step = upto & (strain >= end - grid_step - _STRAIN_TOL)
        if np.count_nonzero(step) >= 2 and float(np.ptp(strain[step])) > 0:
            local = fit_line(strain[step], drr[step])
            if local.slope < (1.0 - slope_tolerance) * cumulative.slope:
                break
        last_pass = end

    if last_pass is None:
        return min(grid_start, limit)
    return last_pass


def failure_analysis(
    trace: SyncedTrace,
    force_drop_frac: float = DEFAULT_FORCE_DROP_FRAC,
    force_floor: float = DEFAULT_FORCE_FLOOR,
    open_ratio: float = DEFAULT_OPEN_RATIO,
    r2_floor: float = DEFAULT_R2_FLOOR,
    linear_grid_start: float = DEFAULT_LINEAR_GRID_START,
    linear_grid_step: float = DEFAULT_LINEAR_GRID_STEP,
    slope_tolerance: float = DEFAULT_SLOPE_TOLERANCE
) -> FailureReport:
    """
    Failure strain, failure mode and linear range of a stretch-to-failure trace.

    Mechanical failure is the first sample whose force falls below
    (1 - force_drop_frac) times the running force maximum once that maximum
    exceeds ``force_floor``. Electrical failure is the first open-circuit
    sample or dR/R above ``open_ratio``. Only samples at positive strain count.
    The earlier event wins; without either the last strain is reported with
    mode ``none``.

    Args:
        trace: Synced monotonic-strain trace with force

    Returns:
        FailureReport

    Raises:
        MissingForceError: If the trace has no force column
        NonMonotonicStrainError: If strain ever decreases or never increases
    """
    if not trace.has_force:
        raise MissingForceError("failure analysis needs force")
    if not trace.has_strain:
        raise AnalysisError("failure analysis needs strain")

    strain, drr, force = trace.strain, trace.d_r_over_r, trace.force
    if np.any(np.diff(strain) < -_STRAIN_TOL):
        raise NonMonotonicStrainError(f"strain decreases at sample {int(np.argmax(np.diff(strain) < -_STRAIN_TOL)) + 1}")
    if not strain[-1] > strain[0]:
        raise NonMonotonicStrainError("strain never increases")

    # events before the specimen is stretched are contact transients, not failure
    stretched = strain > _STRAIN_TOL
    running_max = np.maximum.accumulate(force)
    force_drop = (force < (1.0 - force_drop_frac) * running_max) & (running_max > force_floor)
    with np.errstate(invalid='ignore'):
        open_circuit = trace.open_circuit | (drr > open_ratio)
    transients = np.count_nonzero(~stretched & (force_drop | open_circuit))
    if transients:
        logger.warning(f"Ignoring {transients} failure-like samples at zero strain")
    mechanical = _first_index(stretched & force_drop)
    electrical = _first_index(stretched & open_circuit)

    events = [(idx, mode) for idx, mode in ((mechanical, FailureMode.MECHANICAL),
                                            (electrical, FailureMode.ELECTRICAL)) if idx is not None]
    if events:
        fail_idx, mode = min(events, key=lambda event: event[0])
    else:
        fail_idx, mode = len(trace) - 1, FailureMode.NONE
    failure_strain = float(strain[fail_idx])

    usable = ~trace.open_circuit
    if mode != FailureMode.NONE:
        usable &= np.arange(len(trace)) < fail_idx

    linear_end = _linear_range_end(
        strain[usable], drr[usable], failure_strain, r2_floor,
        linear_grid_start, linear_grid_step, slope_tolerance
    )
    in_range = usable & (strain <= linear_end + _STRAIN_TOL)
    max_force = float(force[in_range].max()) if np.any(in_range) else 0.0

    report = FailureReport(
        failure_strain=failure_strain,
        failure_mode=mode,
        linear_range_end=linear_end,
        max_force_in_linear_range=max_force
    )
    logger.info(f"Failure: {mode.value} at strain {failure_strain:.4f}, "
                f"linear to {linear_end:.2f}, max force there {max_force:.3g} N")
    return report


# ============================================================================
# Tool: build_report
# ============================================================================

def build_report(
    mc: MidpointCurve,
    trace: SyncedTrace,
    cycles: Sequence[Cycle],
    extrema: Sequence[CycleExtrema],
    fit_intercept: bool = True,
    hysteresis_method: str = 'area_ratio',
    drift_method: str = 'ols',
    n_bins: int = DEFAULT_N_BINS,
    use_multiprocessing: Optional[bool] = None
) -> MetricsReport:
    """Compose gauge factor, linearity, hysteresis and drift into one report."""
    fit = gauge_factor_and_linearity(mc, fit_intercept)
    hysteresis = hysteresis_percent(trace, cycles, hysteresis_method, n_bins, use_multiprocessing)
    drift = drift_rates(extrema, drift_method)

    return MetricsReport(
        gauge_factor=fit.slope,
        linearity_r2=fit.r2,
        hysteresis_pct=hysteresis,
        baseline_drift_pct_per_cycle=drift.baseline,
        peak_drift_pct_per_cycle=drift.peak,
        n_cycles=len(cycles)
    )


# ============================================================================
# Rendering
# ============================================================================

def report_to_json(report, config: Optional[Dict[str, Any]] = None) -> str:
    """Serialise a MetricsReport or FailureReport with a ``config`` echo block."""
    document = report.to_dict()
    document['config'] = config or {}
    return json.dumps(document, indent=2, allow_nan=False) + '\n'


def render_table(
    metrics: Optional[MetricsReport] = None,
    failure: Optional[FailureReport] = None
) -> str:
    """Aligned plain-text table of the available metrics."""
    rows = []
    if metrics is not None:
        rows += [
            ('Sensitivity (GF)', f"{metrics.gauge_factor:.2f}"),
            ('Linearity R^2', f"{metrics.linearity_r2:.3f}"),
            ('Hysteresis [%]', f"{metrics.hysteresis_pct:.1f}"),
            ('Rel. Baseline Drift/Cycle [%]', f"{metrics.baseline_drift_pct_per_cycle:.3f}"),
            ('Rel. Peak Drift/Cycle [%]', f"{metrics.peak_drift_pct_per_cycle:.3f}"),
            ('Cycles', f"{metrics.n_cycles}"),
        ]
    if failure is not None:
        rows += [
            ('Stretchability [%]', f"{100.0 * failure.failure_strain:.0f}"),
            ('Failure mode', failure.failure_mode.value),
            ('Linear range [%]', f"{100.0 * failure.linear_range_end:.0f}"),
            ('Max force in linear range [N]', f"{failure.max_force_in_linear_range:.2f}"),
        ]

    name_width = max([len('Metric')] + [len(name) for name, _ in rows])
    value_width = max([len('Value')] + [len(value) for _, value in rows])
    lines = [f"{'Metric':<{name_width}}  {'Value':>{value_width}}",
             f"{'-' * name_width}  {'-' * value_width}"]
    lines += [f"{name:<{name_width}}  {value:>{value_width}}" for name, value in rows]
    return '\n'.join(lines) + '\n'


def failure_curve(trace: SyncedTrace) -> pd.DataFrame:
    """Strain, dR/R (NaN where open) and force of a failure trace."""
    drr = np.where(trace.open_circuit, np.nan, trace.d_r_over_r)
    return pd.DataFrame({
        'strain': trace.strain,
        'dR_over_R': drr,
        'force_N': trace.force
    })


def write_failure_curve(trace: SyncedTrace, path: str) -> str:
    """Write ``strain,dR_over_R,force_N``; open-circuit samples carry the OVER token."""
    failure_curve(trace).to_csv(path, index=False, na_rep=OPEN_CIRCUIT_TOKEN, lineterminator='\n')
    return path
