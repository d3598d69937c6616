#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Cycle Analyzer Module for stretchmetrics
Segments a synced cyclic trace into loading/unloading cycles and builds the
cycle-averaged midpoint curve
Implements tools: segment_cycles, split_branches, midpoint_curve, per_cycle_extrema
"""
from dataclasses import dataclass
from functools import partial
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import find_peaks

from core.exceptions import (
    AnalysisError,
    NoCyclesFoundError,
    DegenerateGridError,
    ValidationError
)
from core.logging_config import get_logger
from core.utils import map_in_order
from data_synchronizer import SyncedTrace

logger = get_logger(__name__)

DEFAULT_PROMINENCE_FRAC = 0.5
DEFAULT_MIN_SEPARATION_FRAC = 0.25
DEFAULT_VALLEY_TOLERANCE_FRAC = 0.1
DEFAULT_N_BINS = 100


@dataclass(frozen=True)
class Cycle:
    """One valley -> peak -> valley cycle as sample indices into a SyncedTrace."""
    start_idx: int
    peak_idx: int
    end_idx: int

    def __post_init__(self):
        if not self.start_idx < self.peak_idx < self.end_idx:
            raise ValidationError(
                'cycle',
                f"indices must satisfy start < peak < end, got "
                f"({self.start_idx}, {self.peak_idx}, {self.end_idx})"
            )


class Branch(NamedTuple):
    """Branch samples, strictly increasing in strain."""
    strain: np.ndarray
    d_r_over_r: np.ndarray


class CycleExtrema(NamedTuple):
    baseline_r: float
    peak_r: float


@dataclass(frozen=True, eq=False)
class MidpointCurve:
    """
    Cycle-averaged midpoint curve on a common strain grid.

    The loading/unloading envelope (mean and population std per grid point)
    is carried along for the hysteresis-loop figure.
    """
    strain_grid: np.ndarray
    mean_mid: np.ndarray
    std_mid: np.ndarray
    n_cycles: int
    mean_loading: Optional[np.ndarray] = None
    std_loading: Optional[np.ndarray] = None
    mean_unloading: Optional[np.ndarray] = None
    std_unloading: Optional[np.ndarray] = None

    def __post_init__(self):
        grid = np.asarray(self.strain_grid, dtype=float)
        if grid.size and np.any(np.diff(grid) <= 0):
            raise ValidationError('strain_grid', "must be strictly increasing")
        for name in ('mean_mid', 'std_mid', 'mean_loading', 'std_loading', 'mean_unloading', 'std_unloading'):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=float)
            if values.shape != grid.shape:
                raise ValidationError(name, f"length {values.size} does not match grid length {grid.size}")
            if name.startswith('std') and np.any(values < 0):
                raise ValidationError(name, "must be >= 0")
            object.__setattr__(self, name, values)
        object.__setattr__(self, 'strain_grid', grid)

    def __len__(self) -> int:
        return int(self.strain_grid.size)


def _require_strain(trace: SyncedTrace) -> np.ndarray:
    if trace.strain is None:
        raise AnalysisError("cycle analysis needs a trace with strain")
    return trace.strain


# ============================================================================
# Tool: segment_cycles
# ============================================================================

def _detect_peaks(strain: np.ndarray, prominence: float, min_separation_frac: float) -> np.ndarray:
    peaks, _ = find_peaks(strain, prominence=prominence)
    if peaks.size >= 2:
        spacing = float(np.median(np.diff(peaks)))
        distance = max(1, int(min_separation_frac * spacing))
        peaks, _ = find_peaks(strain, prominence=prominence, distance=distance)
    return peaks


def _valleys(strain: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    """Valley index before every peak plus the one after the last peak."""
    valleys = np.empty(peaks.size + 1, dtype=int)

    head = strain[:peaks[0] + 1]
    valleys[0] = peaks[0] - int(np.argmin(head[::-1]))

    for i in range(peaks.size - 1):
        lo, hi = peaks[i], peaks[i + 1]
        valleys[i + 1] = lo + int(np.argmin(strain[lo:hi + 1]))

    valleys[-1] = peaks[-1] + int(np.argmin(strain[peaks[-1]:]))
    return valleys


def segment_cycles(
    trace: SyncedTrace,
    prominence_frac: float = DEFAULT_PROMINENCE_FRAC,
    min_separation_frac: float = DEFAULT_MIN_SEPARATION_FRAC,
    valley_tolerance_frac: float = DEFAULT_VALLEY_TOLERANCE_FRAC
) -> List[Cycle]:
    """
    Split a cyclic trace into valley -> peak -> valley cycles.

    Peaks are strain maxima whose prominence is at least ``prominence_frac``
    of the global strain range, re-detected with a minimum separation of
    ``min_separation_frac`` times the median peak spacing. Consecutive cycles
    share their boundary valley sample. Cycles whose valleys do not return to
    within ``valley_tolerance_frac`` of the range above the strain minimum are
    dropped as partial.

    Args:
        trace: Synced trace with strain
        prominence_frac: Peak prominence threshold as a fraction of range
        min_separation_frac: Minimum peak distance as a fraction of median spacing
        valley_tolerance_frac: Allowed valley height as a fraction of range

    Returns:
        Cycles in time order

    Raises:
        NoCyclesFoundError: If no complete cycle is present
    """
    strain = _require_strain(trace)
    if len(trace) < 3:
        raise NoCyclesFoundError(f"trace has only {len(trace)} samples")

    s_min = float(strain.min())
    s_range = float(strain.max()) - s_min
    if s_range <= 0:
        raise NoCyclesFoundError("strain is constant")

    peaks = _detect_peaks(strain, prominence_frac * s_range, min_separation_frac)
    if peaks.size == 0:
        raise NoCyclesFoundError(
            f"no strain peak with prominence >= {prominence_frac:g} x range ({s_range:.4g})"
        )

    valleys = _valleys(strain, peaks)
    valley_limit = s_min + valley_tolerance_frac * s_range

    cycles = []
    for i, peak in enumerate(peaks):
        start, end = int(valleys[i]), int(valleys[i + 1])
        if strain[start] > valley_limit or strain[end] > valley_limit or not start < peak < end:
            logger.warning(f"Dropping partial cycle around sample {peak} "
                           f"(valley strains {strain[start]:.4g}, {strain[end]:.4g})")
            continue
        cycles.append(Cycle(start, int(peak), end))

    if not cycles:
        raise NoCyclesFoundError("every detected peak belongs to a partial cycle")

    logger.info(f"Detected {len(cycles)} cycles in {len(trace)} samples")
    return cycles


# ============================================================================
# Tool: split_branches
# ============================================================================

def _strictly_increasing(strain: np.ndarray, values: np.ndarray) -> Branch:
    """Keep each sample whose strain exceeds every strain kept before it."""
    if strain.size == 0:
        return Branch(strain, values)
    running_max = np.maximum.accumulate(strain)
    keep = np.concatenate(([True], strain[1:] > running_max[:-1]))
    return Branch(strain[keep], values[keep])


def split_branches(trace: SyncedTrace, c: Cycle) -> Tuple[Branch, Branch]:
    """
    Loading and unloading branches of one cycle, both ascending in strain.

    Loading is [start, peak], unloading is [peak, end] reversed. Repeated or
    receding strain samples are dropped (first kept), as are open-circuit
    samples.
    """
    strain = _require_strain(trace)
    drr = trace.d_r_over_r
    closed = ~trace.open_circuit

    load_idx = np.arange(c.start_idx, c.peak_idx + 1)
    load_idx = load_idx[closed[load_idx]]
    unload_idx = np.arange(c.end_idx, c.peak_idx - 1, -1)
    unload_idx = unload_idx[closed[unload_idx]]

    loading = _strictly_increasing(strain[load_idx], drr[load_idx])
    unloading = _strictly_increasing(strain[unload_idx], drr[unload_idx])
    return loading, unloading


def cycle_branches(
    trace: SyncedTrace,
    cycles: Sequence[Cycle],
    use_multiprocessing: Optional[bool] = None
) -> List[Tuple[Branch, Branch]]:
    """split_branches for every cycle, in cycle order."""
    return map_in_order(partial(split_branches, trace), list(cycles), use_multiprocessing)


# ============================================================================
# Tool: midpoint_curve
# ============================================================================

def branch_grid(branches: Sequence[Tuple[Branch, Branch]], n_bins: int) -> np.ndarray:
    """
    Common strain grid for a set of cycles: n_bins points up to the smallest
    cycle peak strain.

    The grid starts at 0 when every branch reaches zero strain, which is the
    normal case because strain is zero at minimum displacement. A branch that
    bottoms out above 0 (a valley left before the crosshead fully returned)
    raises the lower bound to its start strain, since branches are only
    interpolated, never extrapolated.

    Raises:
        DegenerateGridError: If the cycles share no strain interval
    """
    if n_bins < 2:
        raise ValidationError('n_bins', f"must be >= 2, got {n_bins}")
    for k, (loading, unloading) in enumerate(branches):
        if loading.strain.size == 0 or unloading.strain.size == 0:
            raise DegenerateGridError(f"cycle {k} has an empty branch")

    lo = max(max(ld.strain[0], ul.strain[0]) for ld, ul in branches)
    hi = min(max(ld.strain[-1], ul.strain[-1]) for ld, ul in branches)
    if not hi > lo:
        raise DegenerateGridError(f"cycles share no strain interval (lower {lo:.4g}, upper {hi:.4g})")
    return np.linspace(lo, hi, n_bins)


def midpoint_curve(
    trace: SyncedTrace,
    cycles: Sequence[Cycle],
    n_bins: int = DEFAULT_N_BINS,
    use_multiprocessing: Optional[bool] = None
) -> MidpointCurve:
    """
    Average the per-cycle midpoint (loading + unloading)/2 on a common grid.

    Branches are linearly interpolated onto the grid; the grid never extends
    past the smallest cycle peak so nothing is extrapolated.

    Args:
        trace: Synced trace with strain
        cycles: Cycles from segment_cycles
        n_bins: Number of grid points (>= 2)
        use_multiprocessing: Force per-cycle parallelism on/off

    Returns:
        MidpointCurve with across-cycle mean and population std

    Raises:
        NoCyclesFoundError: If ``cycles`` is empty
        DegenerateGridError: If the cycles share no strain interval
    """
    if not cycles:
        raise NoCyclesFoundError("midpoint curve needs at least one cycle")

    branches = cycle_branches(trace, cycles, use_multiprocessing)
    grid = branch_grid(branches, n_bins)

    loading = np.array([np.interp(grid, ld.strain, ld.d_r_over_r) for ld, _ in branches])
    unloading = np.array([np.interp(grid, ul.strain, ul.d_r_over_r) for _, ul in branches])
    midpoints = (loading + unloading) / 2.0

    logger.debug(f"Midpoint grid {grid[0]:.4g}-{grid[-1]:.4g} over {len(cycles)} cycles, {n_bins} bins")

    return MidpointCurve(
        strain_grid=grid,
        mean_mid=midpoints.mean(axis=0),
        std_mid=midpoints.std(axis=0),
        n_cycles=len(cycles),
        mean_loading=loading.mean(axis=0),
        std_loading=loading.std(axis=0),
        mean_unloading=unloading.mean(axis=0),
        std_unloading=unloading.std(axis=0)
    )


# ============================================================================
# Tool: per_cycle_extrema
# ============================================================================

def per_cycle_extrema(trace: SyncedTrace, cycles: Sequence[Cycle]) -> List[CycleExtrema]:
    """
    Baseline (trailing valley) and peak resistance of every cycle.

    Open-circuit samples are skipped: if the end valley itself is open, the
    last closed sample before it is used.

    Raises:
        NoCyclesFoundError: If ``cycles`` is empty or a cycle has no closed sample
    """
    if not cycles:
        raise NoCyclesFoundError("extrema need at least one cycle")

    resistance = trace.resistance
    closed = ~trace.open_circuit
    extrema = []
    for k, c in enumerate(cycles):
        idx = np.arange(c.start_idx, c.end_idx + 1)
        idx = idx[closed[idx]]
        if idx.size == 0:
            raise NoCyclesFoundError(f"cycle {k} contains only open-circuit samples")
        extrema.append(CycleExtrema(float(resistance[idx[-1]]), float(resistance[idx].max())))
    return extrema


# ============================================================================
# Writers
# ============================================================================

def write_midpoint_curve(mc: MidpointCurve, path: str) -> str:
    """Write ``strain,mean_mid,std_mid``."""
    frame = pd.DataFrame({
        'strain': mc.strain_grid,
        'mean_mid': mc.mean_mid,
        'std_mid': mc.std_mid
    })
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def write_loop_curve(mc: MidpointCurve, path: str) -> str:
    """Write the loading/unloading envelope ``strain,mean_loading,std_loading,mean_unloading,std_unloading``."""
    if mc.mean_loading is None:
        raise ValidationError('mc', "midpoint curve carries no loop envelope")
    frame = pd.DataFrame({
        'strain': mc.strain_grid,
        'mean_loading': mc.mean_loading,
        'std_loading': mc.std_loading,
        'mean_unloading': mc.mean_unloading,
        'std_unloading': mc.std_unloading
    })
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def write_cycle_extrema(cycles: Sequence[Cycle], extrema: Sequence[CycleExtrema], path: str) -> str:
    """Write one row per cycle with its indices and resistance extrema."""
    frame = pd.DataFrame({
        'cycle': np.arange(len(cycles)),
        'start_idx': [c.start_idx for c in cycles],
        'peak_idx': [c.peak_idx for c in cycles],
        'end_idx': [c.end_idx for c in cycles],
        'baseline_r_ohm': [e.baseline_r for e in extrema],
        'peak_r_ohm': [e.peak_r for e in extrema]
    })
    frame.to_csv(path, index=False, lineterminator='\n')
    return path
