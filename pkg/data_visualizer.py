#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Data Visualizer Module for stretchmetrics
Implements tools: generateHysteresisLoop, generateResistanceTimeline,
generateFailureCurve, generateAngleOverlay

SVG output is deterministic (fixed hash salt, no date metadata) so repeated
runs produce identical files. The resistance timeline can alternatively be
written as interactive HTML.
"""
from pathlib import Path
from typing import Any, Dict, Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import plotly.graph_objects as go

from core.exceptions import ValidationError
from core.logging_config import get_logger
from angle_calibrator import AngleTrace
from cycle_analyzer import MidpointCurve
from data_synchronizer import SyncedTrace

logger = get_logger(__name__)

plt.rcParams['svg.hashsalt'] = 'stretchmetrics'
plt.rcParams['svg.fonttype'] = 'none'

HYSTERESIS_LOOP_FILE = 'hysteresis_loop.svg'
RESISTANCE_TIMELINE_FILE = 'resistance_timeline'
FAILURE_CURVE_FILE = 'failure_curve.svg'
ANGLE_OVERLAY_FILE = 'angle_overlay.svg'


# ============================================================================
# Helper Functions
# ============================================================================

def _save_svg(fig, output_file: Path) -> str:
    output_file.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(str(output_file), format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Wrote {output_file}")
    return str(output_file.resolve())


def _closed(values: np.ndarray, open_circuit: np.ndarray) -> np.ndarray:
    """Copy with open-circuit samples blanked for plotting."""
    return np.where(open_circuit, np.nan, values)


# ============================================================================
# Tool: generateHysteresisLoop
# ============================================================================

def generateHysteresisLoop(mc: MidpointCurve, outputDir: str) -> Dict[str, Any]:
    """
    Cycle-averaged loading and unloading curves with a +/-1 std band and the
    midpoint curve.

    Args:
        mc: Midpoint curve carrying the loop envelope
        outputDir: Output directory

    Returns:
        dict: {'filePath': str, 'summary': str}
    """
    if mc.mean_loading is None:
        raise ValidationError('mc', "midpoint curve carries no loop envelope")

    x = mc.strain_grid * 100.0
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for mean, std, label in ((mc.mean_loading, mc.std_loading, 'Loading'),
                             (mc.mean_unloading, mc.std_unloading, 'Unloading')):
        ax.fill_between(x, mean - std, mean + std, color='0.8', linewidth=0)
        ax.plot(x, mean, color='black', linewidth=1.2, label=label)
    ax.plot(x, mc.mean_mid, color='tab:red', linestyle='--', linewidth=1.2, label='Midpoint')
    ax.set_xlabel('Strain [%]')
    ax.set_ylabel('ΔR/R')
    ax.set_title(f'Hysteresis loop ({mc.n_cycles} cycles, mean ± 1 std)')
    ax.legend(loc='upper left')
    ax.grid(True, alpha=0.3)
    fig.tight_layout()

    path = _save_svg(fig, Path(outputDir) / HYSTERESIS_LOOP_FILE)
    return {'filePath': path, 'summary': f"Hysteresis loop over {mc.n_cycles} cycles"}


# ============================================================================
# Tool: generateResistanceTimeline
# ============================================================================

def generateResistanceTimeline(trace: SyncedTrace, outputDir: str, plotFormat: str = 'svg') -> Dict[str, Any]:
    """
    Resistance against time over the whole test.

    Args:
        trace: Synced trace
        outputDir: Output directory
        plotFormat: 'svg' (matplotlib) or 'html' (interactive plotly)

    Returns:
        dict: {'filePath': str, 'summary': str}
    """
    if plotFormat not in ('svg', 'html'):
        raise ValidationError('plotFormat', f"Invalid format: {plotFormat}. Must be 'svg' or 'html'")

    resistance_mohm = _closed(trace.resistance, trace.open_circuit) / 1e6
    output_file = Path(outputDir) / f"{RESISTANCE_TIMELINE_FILE}.{plotFormat}"

    if plotFormat == 'html':
        fig = go.Figure()
        fig.add_trace(go.Scattergl(x=trace.t, y=resistance_mohm, mode='lines', name='Resistance'))
        fig.update_layout(
            title='Resistance over time',
            xaxis_title='Time [s]',
            yaxis_title='Resistance [MΩ]',
            template='plotly_white'
        )
        output_file.parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(str(output_file), include_plotlyjs='cdn', div_id='resistance_timeline')
        logger.info(f"Wrote {output_file}")
        path = str(output_file.resolve())
    else:
        fig, ax = plt.subplots(figsize=(9.6, 4.0))
        ax.plot(trace.t, resistance_mohm, color='tab:blue', linewidth=0.6)
        ax.set_xlabel('Time [s]')
        ax.set_ylabel('Resistance [MΩ]')
        ax.set_title('Resistance over time')
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = _save_svg(fig, output_file)

    return {'filePath': path, 'summary': f"Resistance timeline of {len(trace)} samples"}


# ============================================================================
# Tool: generateFailureCurve
# ============================================================================

def generateFailureCurve(trace: SyncedTrace, outputDir: str, failureStrain: Optional[float] = None) -> Dict[str, Any]:
    """Force and dR/R against strain of a stretch-to-failure test on twin axes."""
    if not trace.has_force or not trace.has_strain:
        raise ValidationError('trace', "failure curve needs strain and force")

    x = trace.strain * 100.0
    fig, ax_drr = plt.subplots(figsize=(6.4, 4.8))
    ax_drr.plot(x, _closed(trace.d_r_over_r, trace.open_circuit), color='tab:blue', label='ΔR/R')
    ax_drr.set_xlabel('Strain [%]')
    ax_drr.set_ylabel('ΔR/R', color='tab:blue')

    ax_force = ax_drr.twinx()
    ax_force.plot(x, trace.force, color='tab:orange', label='Force')
    ax_force.set_ylabel('Force [N]', color='tab:orange')

    if failureStrain is not None:
        ax_drr.axvline(failureStrain * 100.0, color='0.4', linestyle=':', linewidth=1.0)
    ax_drr.set_title('Stretch to failure')
    ax_drr.grid(True, alpha=0.3)
    fig.tight_layout()

    path = _save_svg(fig, Path(outputDir) / FAILURE_CURVE_FILE)
    return {'filePath': path, 'summary': f"Failure curve of {len(trace)} samples"}


# ============================================================================
# Tool: generateAngleOverlay
# ============================================================================

def generateAngleOverlay(
    estimated: AngleTrace,
    truth: AngleTrace,
    mapePct: float,
    outputDir: str,
    joint: Optional[str] = None
) -> Dict[str, Any]:
    """Estimated against ground-truth joint angle with the MAPE in the title."""
    fig, ax = plt.subplots(figsize=(9.6, 4.0))
    ax.plot(truth.t, truth.angle, color='black', linewidth=1.2, label='Ground truth')
    ax.plot(estimated.t, estimated.angle, color='tab:red', linewidth=1.0, label='Sensor estimate')
    ax.set_xlabel('Time [s]')
    ax.set_ylabel('Angle [°]')
    label = f"{joint.capitalize()} angle" if joint else 'Joint angle'
    ax.set_title(f"{label} (MAPE {mapePct:.1f}%)")
    ax.legend(loc='upper right')
    ax.grid(True, alpha=0.3)
    fig.tight_layout()

    path = _save_svg(fig, Path(outputDir) / ANGLE_OVERLAY_FILE)
    return {'filePath': path, 'summary': f"{label} overlay, MAPE {mapePct:.2f}%"}
