#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Angle Calibrator Module for stretchmetrics
Fits the linear dR/R -> joint angle model, estimates angles from a sensor
trace and scores them against ground truth
Implements tools: fit_angle_model, estimate_angles, mape, score_estimate
"""
import json
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.exceptions import (
    FileNotFoundError as CustomFileNotFoundError,
    ConfigurationError,
    DegeneratePointsError,
    NoOverlapError,
    AllSamplesBelowThresholdError,
    InvalidValueError,
    NonMonotonicTimeError,
    TooFewSamplesError,
    ValidationError
)
from core.logging_config import get_logger
from data_parser import check_time_column, numeric_column, read_log_frame, write_csv
from data_processor import fit_line
from data_synchronizer import SyncedTrace

logger = get_logger(__name__)

CALIBRATION_HEADER = 'dR_over_R,angle_deg'
ANGLE_HEADER = 't_s,angle_deg'
ANGLE_MIN = 0.0
ANGLE_MAX = 180.0
DEFAULT_MIN_ANGLE = 5.0
JOINTS = ('elbow', 'knee')

_TIME_TOL = 1e-9


@dataclass(frozen=True)
class AngleModel:
    """angle = slope * dR/R + intercept (degrees)."""
    slope: float
    intercept: float
    fit_r2: float
    joint: Optional[str] = None

    def __post_init__(self):
        if not np.isfinite(self.slope) or self.slope == 0:
            raise ValidationError('slope', f"must be finite and nonzero, got {self.slope}")
        if not np.isfinite(self.intercept):
            raise ValidationError('intercept', f"must be finite, got {self.intercept}")
        if not 0.0 <= self.fit_r2 <= 1.0:
            raise ValidationError('fit_r2', f"must be in [0, 1], got {self.fit_r2}")
        if self.joint is not None and self.joint not in JOINTS:
            raise ValidationError('joint', f"must be one of {JOINTS}, got '{self.joint}'")

    def angle(self, d_r_over_r) -> np.ndarray:
        return self.slope * np.asarray(d_r_over_r, dtype=float) + self.intercept

    def inverse(self, angle) -> np.ndarray:
        """dR/R that maps onto ``angle``."""
        return (np.asarray(angle, dtype=float) - self.intercept) / self.slope

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class AngleTrace:
    """
    Joint angle time series in degrees.

    ``clamped`` flags samples whose raw estimate fell outside [0, 180].
    """
    t: np.ndarray
    angle: np.ndarray
    clamped: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        angle = np.array(self.angle, dtype=float)
        clamped = np.zeros(t.shape, dtype=bool) if self.clamped is None else np.array(self.clamped, dtype=bool)

        if angle.shape != t.shape or clamped.shape != t.shape:
            raise ValidationError('angle', f"length {angle.size} does not match t length {t.size}")
        bad_t = np.flatnonzero(np.diff(t) <= 0)
        if bad_t.size:
            raise NonMonotonicTimeError("angle trace time must be strictly increasing", row_number=int(bad_t[0]) + 2)
        bad_angle = np.flatnonzero(~((angle >= ANGLE_MIN) & (angle <= ANGLE_MAX)))
        if bad_angle.size:
            i = int(bad_angle[0])
            raise InvalidValueError(f"angle {angle[i]!r} outside [0, 180]", row_number=i + 1)

        for arr in (t, angle, clamped):
            arr.setflags(write=False)
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'angle', angle)
        object.__setattr__(self, 'clamped', clamped)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def n_clamped(self) -> int:
        return int(self.clamped.sum())


# ============================================================================
# Readers
# ============================================================================

def parse_calibration_points(path: str) -> np.ndarray:
    """
    Read ``dR_over_R,angle_deg`` calibration points.

    Returns:
        (n, 2) array of (dR/R, angle) rows
    """
    frame = read_log_frame(path, CALIBRATION_HEADER)
    if len(frame) < 2:
        raise TooFewSamplesError(f"need at least 2 calibration points, found {len(frame)}")
    points = np.column_stack([numeric_column(frame, 'dR_over_R'), numeric_column(frame, 'angle_deg')])
    logger.info(f"Parsed {len(points)} calibration points from {path}")
    return points


def parse_angle_log(path: str) -> AngleTrace:
    """Read a ``t_s,angle_deg`` ground-truth or estimate log."""
    frame = read_log_frame(path, ANGLE_HEADER)
    t = numeric_column(frame, 't_s')
    check_time_column(t)
    trace = AngleTrace(t=t, angle=numeric_column(frame, 'angle_deg'))
    logger.info(f"Parsed {len(trace)} angle samples from {path}")
    return trace


def load_angle_model(path: str) -> AngleModel:
    """Read a model JSON written by write_angle_model."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except OSError:
        raise CustomFileNotFoundError(path)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ConfigurationError(f"Invalid model JSON: {e}", path)
    try:
        return AngleModel(
            slope=float(document['slope']),
            intercept=float(document['intercept']),
            fit_r2=float(document['fit_r2']),
            joint=document.get('joint')
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Model JSON is missing or has an invalid field: {e}", path)


# ============================================================================
# Tool: fit_angle_model
# ============================================================================

def fit_angle_model(points: Sequence[Tuple[float, float]], joint: Optional[str] = None) -> AngleModel:
    """
    Least-squares angle = slope * dR/R + intercept.

    Args:
        points: (dR/R, angle) pairs
        joint: Optional joint label ('elbow' or 'knee')

    Raises:
        DegeneratePointsError: Fewer than 2 points, all dR/R equal, or zero slope
    """
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] < 2:
        raise DegeneratePointsError(f"need at least 2 calibration points, got {data.shape[0]}")
    if float(np.ptp(data[:, 0])) == 0.0:
        raise DegeneratePointsError("all calibration points share the same dR/R")

    fit = fit_line(data[:, 0], data[:, 1])
    if fit.slope == 0.0:
        raise DegeneratePointsError("calibration angles do not change with dR/R")

    model = AngleModel(slope=fit.slope, intercept=fit.intercept, fit_r2=fit.r2, joint=joint)
    logger.info(f"Angle model: {model.slope:.4f} deg per unit dR/R, intercept {model.intercept:.3f} deg, "
                f"R^2 {model.fit_r2:.4f}")
    return model


# ============================================================================
# Tool: estimate_angles
# ============================================================================

def estimate_angles(model: AngleModel, trace: SyncedTrace) -> AngleTrace:
    """
    Map every dR/R sample through the model, clamping to [0, 180] with flags.

    Open-circuit samples are dropped.
    """
    closed = ~trace.open_circuit
    raw = model.angle(trace.d_r_over_r[closed])
    clamped = (raw < ANGLE_MIN) | (raw > ANGLE_MAX)
    estimated = AngleTrace(t=trace.t[closed], angle=np.clip(raw, ANGLE_MIN, ANGLE_MAX), clamped=clamped)
    if estimated.n_clamped:
        logger.warning(f"{estimated.n_clamped} of {len(estimated)} estimated angles clamped to [0, 180]")
    return estimated


# ============================================================================
# Tool: mape
# ============================================================================

def _scored_errors(estimated: AngleTrace, truth: AngleTrace, min_angle: float) -> np.ndarray:
    inside = (estimated.t >= truth.t[0] - _TIME_TOL) & (estimated.t <= truth.t[-1] + _TIME_TOL)
    if not np.any(inside):
        raise NoOverlapError(
            f"estimate [{estimated.t[0]:g}, {estimated.t[-1]:g}] s and truth "
            f"[{truth.t[0]:g}, {truth.t[-1]:g}] s do not overlap"
        )
    theta_hat = estimated.angle[inside]
    theta = np.interp(estimated.t[inside], truth.t, truth.angle)

    # the relative error is undefined at a truth angle of 0
    scored = (theta >= min_angle) & (theta > 0)
    if not np.any(scored):
        raise AllSamplesBelowThresholdError(f"no truth angle reaches {min_angle:g} deg")
    return np.abs(theta_hat[scored] - theta[scored]) / theta[scored]


def mape(estimated: AngleTrace, truth: AngleTrace, min_angle: float = DEFAULT_MIN_ANGLE) -> float:
    """
    Mean absolute percentage error of the estimate against interpolated truth.

    Only samples whose truth angle is at least ``min_angle`` are scored.

    Raises:
        NoOverlapError: If no estimate sample lies within the truth time span
        AllSamplesBelowThresholdError: If every truth angle is below ``min_angle``
    """
    return float(100.0 * np.mean(_scored_errors(estimated, truth, min_angle)))


def score_estimate(estimated: AngleTrace, truth: AngleTrace, min_angle: float = DEFAULT_MIN_ANGLE) -> Dict[str, Any]:
    """Score block ``{mape_pct, n_scored, min_angle_deg}``."""
    errors = _scored_errors(estimated, truth, min_angle)
    score = {
        'mape_pct': float(100.0 * np.mean(errors)),
        'n_scored': int(errors.size),
        'min_angle_deg': float(min_angle)
    }
    logger.info(f"MAPE {score['mape_pct']:.3f}% over {score['n_scored']} samples")
    return score


# ============================================================================
# Writers
# ============================================================================

def write_angle_model(model: AngleModel, path: str) -> str:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(model.to_dict(), indent=2, allow_nan=False) + '\n')
    return path


def write_angle_trace(trace: AngleTrace, path: str) -> str:
    """Write ``t_s,angle_deg``."""
    return write_csv(pd.DataFrame({'t_s': trace.t, 'angle_deg': trace.angle}), path)


def write_calibration_points(points: np.ndarray, path: str) -> str:
    """Write ``dR_over_R,angle_deg``."""
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    return write_csv(pd.DataFrame({'dR_over_R': data[:, 0], 'angle_deg': data[:, 1]}), path)
