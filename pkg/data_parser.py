#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Instrument Log Parser Module for stretchmetrics
Parses LCR-meter resistance logs and tensile-tester logs into validated traces
Implements tools: parse_resistance_log, parse_tensile_log, baseline_resistance
"""
import math
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

# Import core modules
from core.exceptions import (
    FileNotFoundError as CustomFileNotFoundError,
    SchemaMismatchError,
    TooFewSamplesError,
    NonMonotonicTimeError,
    NonPositiveResistanceError,
    NegativeDisplacementError,
    InvalidValueError,
    ValidationError,
    WindowTooShortError
)
from core.logging_config import get_logger

# Setup logger
logger = get_logger(__name__)

RESISTANCE_HEADER = 't_s,R_ohm'
TENSILE_HEADER = 't_s,disp_mm,force_N'
OPEN_CIRCUIT_TOKEN = 'OVER'


# ============================================================================
# Domain types
# ============================================================================

@dataclass(frozen=True)
class TestConfig:
    """
    Test-level settings shared by ingestion and synchronisation.

    gauge_length is the clamp separation in millimetres used to turn crosshead
    displacement into strain; baseline_window is the leading relaxed window in
    seconds whose median resistance defines R0.
    """
    __test__ = False

    gauge_length: float = 100.0
    baseline_window: float = 2.0
    sample_rate_hint: float = 10.0
    time_offset_s: float = 0.0
    baseline_resistance: Optional[float] = None

    def __post_init__(self):
        if not (self.gauge_length > 0 and math.isfinite(self.gauge_length)):
            raise ValidationError('gauge_length', f"must be > 0, got {self.gauge_length}")
        if not (self.baseline_window > 0 and math.isfinite(self.baseline_window)):
            raise ValidationError('baseline_window', f"must be > 0, got {self.baseline_window}")
        if not self.sample_rate_hint > 0:
            raise ValidationError('sample_rate_hint', f"must be > 0, got {self.sample_rate_hint}")
        if not math.isfinite(self.time_offset_s):
            raise ValidationError('time_offset_s', "must be finite")
        if self.baseline_resistance is not None and not self.baseline_resistance > 0:
            raise ValidationError('baseline_resistance', f"must be > 0, got {self.baseline_resistance}")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _first_non_increasing(t: np.ndarray) -> Optional[int]:
    """Index (0-based) of the first sample whose time does not exceed its predecessor."""
    bad = np.flatnonzero(np.diff(t) <= 0)
    return int(bad[0]) + 1 if bad.size else None


@dataclass(frozen=True, eq=False)
class ResistanceTrace:
    """
    Timestamped resistance samples from the LCR meter.

    Open-circuit samples (meter overrange) are kept with ``r = inf`` and
    ``open_circuit = True``.
    """
    t: np.ndarray
    r: np.ndarray
    open_circuit: np.ndarray = None

    def __post_init__(self):
        t = _frozen_array(self.t)
        r = np.array(self.r, dtype=float)
        if self.open_circuit is None:
            oc = ~np.isfinite(r)
        else:
            oc = np.array(self.open_circuit, dtype=bool)
        r[oc] = np.inf
        r.setflags(write=False)
        oc.setflags(write=False)
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'r', r)
        object.__setattr__(self, 'open_circuit', oc)

        if t.ndim != 1 or t.shape != r.shape:
            raise SchemaMismatchError("t and r must be 1-D arrays of equal length")
        if t.size < 2:
            raise TooFewSamplesError(f"need at least 2 samples, got {t.size}")
        if not np.all(np.isfinite(t)):
            raise InvalidValueError("non-finite timestamp")
        bad = _first_non_increasing(t)
        if bad is not None:
            raise NonMonotonicTimeError(f"t={t[bad]!r} does not exceed previous t", row_number=bad + 1)
        finite = ~oc
        if np.any(r[finite] <= 0) or np.any(np.isnan(r[finite])):
            idx = int(np.flatnonzero(finite & ~(r > 0))[0])
            raise NonPositiveResistanceError(f"R={r[idx]!r} must be > 0", row_number=idx + 1)

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def n_open_circuit(self) -> int:
        return int(self.open_circuit.sum())


@dataclass(frozen=True, eq=False)
class TensileTrace:
    """Timestamped crosshead displacement (mm) and force (N) from the tensile tester."""
    t: np.ndarray
    displacement: np.ndarray
    force: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.t)
        d = _frozen_array(self.displacement)
        f = _frozen_array(self.force)
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'displacement', d)
        object.__setattr__(self, 'force', f)

        if t.ndim != 1 or t.shape != d.shape or t.shape != f.shape:
            raise SchemaMismatchError("t, displacement and force must be 1-D arrays of equal length")
        if t.size < 2:
            raise TooFewSamplesError(f"need at least 2 samples, got {t.size}")
        if not np.all(np.isfinite(t)):
            raise InvalidValueError("non-finite timestamp")
        bad = _first_non_increasing(t)
        if bad is not None:
            raise NonMonotonicTimeError(f"t={t[bad]!r} does not exceed previous t", row_number=bad + 1)
        if not np.all(np.isfinite(d)):
            raise InvalidValueError("non-finite displacement")
        if np.any(d < 0):
            idx = int(np.flatnonzero(d < 0)[0])
            raise NegativeDisplacementError(f"displacement {d[idx]!r} mm is negative", row_number=idx + 1)
        if not np.all(np.isfinite(f)):
            idx = int(np.flatnonzero(~np.isfinite(f))[0])
            raise InvalidValueError("force must be finite", row_number=idx + 1)

    def __len__(self) -> int:
        return int(self.t.size)


# ============================================================================
# Helper Functions for File Parsing
# ============================================================================

def read_log_frame(path: str, header: str) -> pd.DataFrame:
    """
    Read a strict instrument CSV whose header must match exactly.

    Cells stay text so every column can be validated with its row number;
    the frame index is the 1-based data-row number. Blank lines are skipped.

    Args:
        path: File path (UTF-8 with or without BOM, LF or CRLF line endings)
        header: Expected header line, e.g. ``'t_s,R_ohm'``

    Raises:
        FileNotFoundError: If the path is not a readable file
        SchemaMismatchError: On undecodable text, a header mismatch or a
            wrong column count
    """
    if not path or not os.path.isfile(path):
        raise CustomFileNotFoundError(str(path))

    # header=None: the header line fixes the field count for every row
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding='utf-8-sig')
    except pd.errors.EmptyDataError:
        raise SchemaMismatchError(f"{path}: empty file, expected header '{header}'")
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        row_number = int(match.group(1)) - 1 if match else None
        raise SchemaMismatchError(f"{path}: wrong number of columns", row_number=row_number)
    except UnicodeDecodeError as e:
        raise SchemaMismatchError(f"{path}: not UTF-8 text ({e.reason} at byte {e.start})")
    except OSError as e:
        raise CustomFileNotFoundError(str(path), f"Cannot read {path}: {e.strerror or e}")

    found = ','.join(raw.iloc[0].fillna(''))
    if found != header:
        raise SchemaMismatchError(f"{path}: header '{found}' does not match '{header}'")

    frame = raw.iloc[1:].copy()
    frame.columns = header.split(',')
    frame.index = pd.RangeIndex(1, len(frame) + 1)
    short = frame.isna().any(axis=1)
    if short.any():
        row_number = int(short.idxmax())
        raise SchemaMismatchError(
            f"expected {len(frame.columns)} columns",
            row_number=row_number,
            row_content=','.join(frame.loc[row_number].dropna())
        )
    return frame


def _to_float(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return math.nan


def numeric_column(frame: pd.DataFrame, column: str, open_token: Optional[str] = None) -> np.ndarray:
    """
    Convert one text column to finite floats.

    Cells equal to ``open_token`` become ``inf``; anything else that is not a
    finite decimal raises InvalidValueError at its row.
    """
    cells = frame[column].str.strip()
    is_open = cells == open_token if open_token is not None else pd.Series(False, index=cells.index)
    values = cells.map(_to_float).to_numpy(dtype=float)
    values[is_open.to_numpy()] = math.inf

    bad = ~np.isfinite(values) & ~is_open.to_numpy()
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        cell = frame[column].iloc[i]
        raise InvalidValueError(f"'{cell}' is not a finite decimal number",
                                row_number=i + 1, row_content=cell)
    return values


def check_time_column(t: np.ndarray) -> None:
    """Shared checks for row count and strictly increasing time."""
    if t.size < 2:
        raise TooFewSamplesError(f"need at least 2 data rows, found {t.size}")
    bad = _first_non_increasing(t)
    if bad is not None:
        raise NonMonotonicTimeError(
            f"t={t[bad]!r} does not exceed previous t={t[bad - 1]!r}",
            row_number=bad + 1
        )


# ============================================================================
# Tool: parse_resistance_log
# ============================================================================

def parse_resistance_log(path: str) -> ResistanceTrace:
    """
    Parse an LCR-meter resistance log.

    Args:
        path (str): CSV file with header ``t_s,R_ohm``. ``OVER`` in the R column
            marks an open-circuit sample.

    Returns:
        ResistanceTrace

    Raises:
        FileNotFoundError, SchemaMismatchError, TooFewSamplesError,
        NonMonotonicTimeError, NonPositiveResistanceError, InvalidValueError
    """
    frame = read_log_frame(path, RESISTANCE_HEADER)
    t = numeric_column(frame, 't_s')
    r = numeric_column(frame, 'R_ohm', open_token=OPEN_CIRCUIT_TOKEN)
    check_time_column(t)

    trace = ResistanceTrace(t=t, r=r)
    logger.info(f"Parsed {len(trace)} resistance samples from {path} "
                f"({trace.n_open_circuit} open-circuit)")
    return trace


# ============================================================================
# Tool: parse_tensile_log
# ============================================================================

def parse_tensile_log(path: str) -> TensileTrace:
    """
    Parse a tensile-tester log.

    Args:
        path (str): CSV file with header ``t_s,disp_mm,force_N``

    Returns:
        TensileTrace

    Raises:
        FileNotFoundError, SchemaMismatchError, TooFewSamplesError,
        NonMonotonicTimeError, NegativeDisplacementError, InvalidValueError
    """
    frame = read_log_frame(path, TENSILE_HEADER)
    t = numeric_column(frame, 't_s')
    displacement = numeric_column(frame, 'disp_mm')
    force = numeric_column(frame, 'force_N')
    check_time_column(t)

    trace = TensileTrace(t=t, displacement=displacement, force=force)
    logger.info(f"Parsed {len(trace)} tensile samples from {path}")
    return trace


# ============================================================================
# Tool: baseline_resistance
# ============================================================================

def baseline_resistance(trace: ResistanceTrace, cfg: TestConfig) -> float:
    """
    Relaxed baseline resistance R0 used to normalise resistance to dR/R.

    R0 is the median of the finite samples in the leading window
    ``t < t_first + cfg.baseline_window``. An explicit
    ``cfg.baseline_resistance`` takes precedence.

    Raises:
        WindowTooShortError: trace shorter than the window, or no finite
            sample inside it
    """
    if cfg.baseline_resistance is not None:
        return float(cfg.baseline_resistance)

    if trace.duration < cfg.baseline_window:
        raise WindowTooShortError(
            f"trace covers {trace.duration:g} s, baseline window needs {cfg.baseline_window:g} s"
        )

    in_window = (trace.t < trace.t[0] + cfg.baseline_window) & ~trace.open_circuit
    if not in_window.any():
        raise WindowTooShortError("no finite resistance sample inside the baseline window")

    r0 = float(np.median(trace.r[in_window]))
    logger.debug(f"Baseline R0 = {r0:g} ohm from {int(in_window.sum())} samples")
    return r0


# ============================================================================
# Writers
# ============================================================================

def write_csv(frame: pd.DataFrame, path: str) -> str:
    """
    Write ``frame`` in the instrument CSV dialect: LF endings, no index.

    pandas formats float columns with the shortest text that parses back to
    the same float, so written logs read back bit-exact. NaN is written as
    the open-circuit token.
    """
    frame.to_csv(path, index=False, na_rep=OPEN_CIRCUIT_TOKEN, lineterminator='\n')
    return path


def write_resistance_log(trace: ResistanceTrace, path: str) -> str:
    """Write a resistance trace in the meter CSV schema; returns the path."""
    return write_csv(pd.DataFrame({
        't_s': trace.t,
        'R_ohm': np.where(trace.open_circuit, np.nan, trace.r)
    }), path)


def write_tensile_log(trace: TensileTrace, path: str) -> str:
    """Write a tensile trace in the tester CSV schema; returns the path."""
    return write_csv(pd.DataFrame({
        't_s': trace.t,
        'disp_mm': trace.displacement,
        'force_N': trace.force
    }), path)


# Main function for testing
if __name__ == "__main__":
    import sys

    if len(sys.argv) > 1:
        input_file = sys.argv[1]
        result = parse_resistance_log(input_file)
        print(f"Samples: {len(result)}")
        print(f"Duration: {result.duration:.3f} s")
        print(f"Open-circuit samples: {result.n_open_circuit}")
        print(f"R0 (default window): {baseline_resistance(result, TestConfig()):.6g} ohm")
    else:
        print("Usage: python data_parser.py <resistance_log.csv>")
