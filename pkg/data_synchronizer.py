#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Trace Synchronizer Module for stretchmetrics
Merges resistance and tensile traces onto the resistance timebase and derives
strain and normalised resistance change (dR/R)
Implements tools: synchronize, strain_only, normalize_resistance
"""
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from core.exceptions import (
    NoOverlapError,
    DegenerateTensileTraceError,
    NonMonotonicTimeError,
    InvalidValueError,
    ValidationError
)
from core.logging_config import get_logger
from data_parser import (
    ResistanceTrace,
    TensileTrace,
    TestConfig,
    baseline_resistance,
    write_csv
)

logger = get_logger(__name__)

SYNCED_HEADER = 't_s,strain,dR_over_R,force_N'
MIN_OVERLAP_S = 1.0
UNIFORM_RTOL = 1e-9
_EDGE_TOL_S = 1e-9


@dataclass(frozen=True, eq=False)
class SyncedTrace:
    """
    Common-timebase series of strain, dR/R and optional force.

    ``strain`` is None for sensor-only recordings (no tensile tester), ``force``
    is None when the tensile log carried no usable force.
    """
    t: np.ndarray
    d_r_over_r: np.ndarray
    r0: float
    strain: Optional[np.ndarray] = None
    force: Optional[np.ndarray] = None
    open_circuit: Optional[np.ndarray] = None
    gauge_length: Optional[float] = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        drr = np.array(self.d_r_over_r, dtype=float)
        oc = np.zeros(t.shape, dtype=bool) if self.open_circuit is None else np.array(self.open_circuit, dtype=bool)
        strain = None if self.strain is None else np.array(self.strain, dtype=float)
        force = None if self.force is None else np.array(self.force, dtype=float)

        for name, arr in (('d_r_over_r', drr), ('open_circuit', oc), ('strain', strain), ('force', force)):
            if arr is not None and arr.shape != t.shape:
                raise ValidationError(name, f"length {arr.shape} does not match t {t.shape}")
        if not self.r0 > 0:
            raise ValidationError('r0', f"must be > 0, got {self.r0}")
        if t.size and np.any(np.diff(t) <= 0):
            raise NonMonotonicTimeError("synced timebase must be strictly increasing")
        if strain is not None and np.any(strain < 0):
            raise InvalidValueError("strain must be >= 0")
        if np.any(~np.isfinite(drr[~oc])):
            raise InvalidValueError("dR/R must be finite outside open-circuit samples")

        for arr in (t, drr, oc, strain, force):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'd_r_over_r', drr)
        object.__setattr__(self, 'open_circuit', oc)
        object.__setattr__(self, 'strain', strain)
        object.__setattr__(self, 'force', force)
        object.__setattr__(self, 'r0', float(self.r0))

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def has_force(self) -> bool:
        return self.force is not None

    @property
    def has_strain(self) -> bool:
        return self.strain is not None

    @property
    def resistance(self) -> np.ndarray:
        """Absolute resistance in ohms (inf at open-circuit samples)."""
        return self.r0 * (1.0 + self.d_r_over_r)

    @property
    def sample_period(self) -> float:
        return float(np.median(np.diff(self.t))) if self.t.size > 1 else float('nan')


class StrainSeries(NamedTuple):
    t: np.ndarray
    strain: np.ndarray


def _normalise(r: ResistanceTrace, r0: float, mask: np.ndarray) -> np.ndarray:
    with np.errstate(invalid='ignore', over='ignore'):
        drr = (r.r[mask] - r0) / r0
    drr[r.open_circuit[mask]] = np.inf
    return drr


def _warn_if_not_uniform(t: np.ndarray) -> None:
    if t.size < 3:
        return
    dt = np.diff(t)
    step = float(np.median(dt))
    deviation = float(np.max(np.abs(dt - step)))
    if deviation > UNIFORM_RTOL * step:
        logger.warning(f"Resistance timebase is not uniform: max step deviation {deviation:.3g} s "
                       f"on a {step:.6g} s period")


def _check_tensile(ten: TensileTrace) -> None:
    if len(ten) < 2 or ten.t[-1] == ten.t[0]:
        raise DegenerateTensileTraceError("tensile trace spans zero time")


def _strain_from_displacement(displacement: np.ndarray, zero: float, gauge_length: float) -> np.ndarray:
    return (displacement - zero) / gauge_length


# ============================================================================
# Tool: synchronize
# ============================================================================

def synchronize(r: ResistanceTrace, ten: TensileTrace, cfg: TestConfig) -> SyncedTrace:
    """
    Put a tensile trace onto the resistance timebase.

    The resistance timebase is master: displacement and force are linearly
    interpolated onto it, resistance is never resampled. Strain zero is the
    minimum displacement of the tensile trace; tensile time is shifted by
    ``cfg.time_offset_s``.

    Args:
        r: Resistance trace
        ten: Tensile trace
        cfg: Test configuration

    Returns:
        SyncedTrace restricted to the time overlap of both traces

    Raises:
        DegenerateTensileTraceError: If the tensile trace spans no time
        NoOverlapError: If the traces overlap for less than 1 s
    """
    _check_tensile(ten)

    t_ten = ten.t + cfg.time_offset_s
    lo = max(float(r.t[0]), float(t_ten[0]))
    hi = min(float(r.t[-1]), float(t_ten[-1]))
    if hi - lo < MIN_OVERLAP_S:
        raise NoOverlapError(
            f"resistance [{r.t[0]:g}, {r.t[-1]:g}] s and tensile [{t_ten[0]:g}, {t_ten[-1]:g}] s "
            f"overlap for less than {MIN_OVERLAP_S:g} s"
        )

    r0 = baseline_resistance(r, cfg)

    mask = (r.t >= lo - _EDGE_TOL_S) & (r.t <= hi + _EDGE_TOL_S)
    t = r.t[mask]
    _warn_if_not_uniform(t)

    displacement = np.interp(t, t_ten, ten.displacement)
    strain = _strain_from_displacement(displacement, float(ten.displacement.min()), cfg.gauge_length)
    force = np.interp(t, t_ten, ten.force)

    trace = SyncedTrace(
        t=t,
        d_r_over_r=_normalise(r, r0, mask),
        r0=r0,
        strain=strain,
        force=force,
        open_circuit=r.open_circuit[mask],
        gauge_length=cfg.gauge_length
    )

    logger.info(f"Synchronized {len(trace)} of {len(r)} resistance samples "
                f"(overlap {lo:g}-{hi:g} s, R0={r0:.6g} ohm)")
    return trace


# ============================================================================
# Tool: strain_only
# ============================================================================

def strain_only(ten: TensileTrace, cfg: TestConfig) -> StrainSeries:
    """
    Strain of a tensile trace on its own timebase.

    Raises:
        DegenerateTensileTraceError: If the tensile trace spans no time
    """
    _check_tensile(ten)
    strain = _strain_from_displacement(ten.displacement, float(ten.displacement.min()), cfg.gauge_length)
    return StrainSeries(t=ten.t + cfg.time_offset_s, strain=strain)


# ============================================================================
# Tool: normalize_resistance
# ============================================================================

def normalize_resistance(r: ResistanceTrace, cfg: TestConfig) -> SyncedTrace:
    """
    dR/R of a sensor-only recording (e.g. a wearable session).

    The returned trace carries no strain or force.
    """
    r0 = baseline_resistance(r, cfg)
    mask = np.ones(len(r), dtype=bool)
    return SyncedTrace(
        t=r.t,
        d_r_over_r=_normalise(r, r0, mask),
        r0=r0,
        open_circuit=r.open_circuit
    )


# ============================================================================
# Writers
# ============================================================================

def write_synced_trace(trace: SyncedTrace, path: str) -> str:
    """Write a synced trace as ``t_s,strain,dR_over_R,force_N``; empty cells for absent columns."""
    absent = [''] * len(trace)
    return write_csv(pd.DataFrame({
        't_s': trace.t,
        'strain': trace.strain if trace.has_strain else absent,
        'dR_over_R': np.where(trace.open_circuit, np.nan, trace.d_r_over_r),
        'force_N': trace.force if trace.has_force else absent
    }), path)
