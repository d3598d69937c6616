#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Report Writer Module for stretchmetrics
File-producing pipeline tools behind the command line
Implements tools: simulateTest, analyzeCyclicTest, analyzeFailureTest,
calibrateAngleModel, estimateJointAngles, runSeedSweep

Output file names are fixed so that re-running a command overwrites its
previous outputs.
"""
import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.exceptions import AnalysisError, ValidationError
from core.logging_config import get_logger
from angle_calibrator import (
    estimate_angles,
    fit_angle_model,
    load_angle_model,
    parse_angle_log,
    parse_calibration_points,
    score_estimate,
    write_angle_model,
    write_angle_trace,
    write_calibration_points
)
from cycle_analyzer import (
    Cycle,
    CycleExtrema,
    MidpointCurve,
    midpoint_curve,
    per_cycle_extrema,
    segment_cycles,
    write_cycle_extrema,
    write_loop_curve,
    write_midpoint_curve
)
from data_parser import parse_resistance_log, parse_tensile_log, write_resistance_log, write_tensile_log
from data_processor import (
    MetricsReport,
    build_report,
    failure_analysis,
    render_table,
    report_to_json,
    write_failure_curve
)
from data_synchronizer import SyncedTrace, normalize_resistance, synchronize, write_synced_trace
from data_visualizer import (
    generateAngleOverlay,
    generateFailureCurve,
    generateHysteresisLoop,
    generateResistanceTimeline
)
from run_config import RunConfig
from sensor_simulator import (
    calibration_points,
    generate_motion,
    ground_truth,
    load_sim_params,
    simulate_cyclic,
    simulate_failure,
    simulate_motion,
    write_ground_truth
)

logger = get_logger(__name__)

SIMULATION_KINDS = ('cyclic', 'failure', 'motion')
ANALYSIS_KINDS = ('cyclic', 'failure')

RESISTANCE_FILE = 'resistance.csv'
TENSILE_FILE = 'tensile.csv'
GROUND_TRUTH_FILE = 'ground_truth.json'
TRUTH_ANGLES_FILE = 'truth_angles.csv'
CALIBRATION_POINTS_FILE = 'calibration_points.csv'
REPORT_JSON_FILE = 'report.json'
REPORT_TEXT_FILE = 'report.txt'
MIDPOINT_CURVE_FILE = 'midpoint_curve.csv'
LOOP_CURVE_FILE = 'loop_curve.csv'
CYCLE_EXTREMA_FILE = 'cycle_extrema.csv'
SYNCED_TRACE_FILE = 'synced_trace.csv'
FAILURE_CURVE_CSV_FILE = 'failure_curve.csv'
ANGLE_MODEL_FILE = 'angle_model.json'
ESTIMATED_ANGLES_FILE = 'estimated_angles.csv'
SCORE_FILE = 'score.json'
SWEEP_METRICS_FILE = 'sweep_metrics.csv'
SWEEP_SUMMARY_FILE = 'sweep_summary.json'

DEFAULT_SWEEP_NOISE = 0.002


class CyclicAnalysis(NamedTuple):
    report: MetricsReport
    midpoint: MidpointCurve
    cycles: List[Cycle]
    extrema: List[CycleExtrema]


def _output_dir(path: str) -> Path:
    output_dir = Path(path)
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def _write_json(document: Dict[str, Any], path: Path) -> str:
    try:
        text = json.dumps(document, indent=2, allow_nan=False)
    except ValueError:
        raise AnalysisError(f"{path.name} would contain a non-finite number")
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text + '\n')
    return str(path)


def _write_text(text: str, path: Path) -> str:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)
    return str(path)


# ============================================================================
# Tool: simulateTest
# ============================================================================

def simulateTest(
    kind: str,
    outputDir: str,
    paramsFile: Optional[str] = None,
    seed: Optional[int] = None
) -> Dict[str, Any]:
    """
    Write simulated instrument logs plus a ground-truth sidecar.

    Args:
        kind: 'cyclic', 'failure' or 'motion'
        outputDir: Output directory
        paramsFile: Optional params JSON (sections sensor/protocol/motion)
        seed: Overrides the sensor seed

    Returns:
        dict: {'outputDir': str, 'files': [str], 'summary': str}
    """
    if kind not in SIMULATION_KINDS:
        raise ValidationError('kind', f"Invalid kind: {kind}. Must be one of {SIMULATION_KINDS}")

    sensor, protocol, motion = load_sim_params(paramsFile, seed)
    out = _output_dir(outputDir)
    files = []

    if kind == 'motion':
        angles = generate_motion(motion)
        r_trace = simulate_motion(sensor, angles, motion.model, motion.hysteresis_scale)
        files.append(write_resistance_log(r_trace, str(out / RESISTANCE_FILE)))
        files.append(write_angle_trace(angles, str(out / TRUTH_ANGLES_FILE)))
        files.append(write_calibration_points(calibration_points(sensor, motion), str(out / CALIBRATION_POINTS_FILE)))
        document = ground_truth(kind, sensor, motion=motion)
        summary = f"Simulated {motion.joint} motion, {len(angles)} samples"
    else:
        simulate = simulate_cyclic if kind == 'cyclic' else simulate_failure
        r_trace, ten_trace = simulate(sensor, protocol)
        files.append(write_resistance_log(r_trace, str(out / RESISTANCE_FILE)))
        files.append(write_tensile_log(ten_trace, str(out / TENSILE_FILE)))
        document = ground_truth(kind, sensor, proto=protocol)
        summary = f"Simulated {kind} test, {len(r_trace)} samples"

    files.append(write_ground_truth(document, str(out / GROUND_TRUTH_FILE)))
    logger.info(summary)
    return {'outputDir': str(out.resolve()), 'files': files, 'summary': summary}


# ============================================================================
# Tool: analyzeCyclicTest
# ============================================================================

def analyze_cyclic_trace(trace: SyncedTrace, config: RunConfig) -> CyclicAnalysis:
    """Segmentation, midpoint curve, extrema and metrics of a synced cyclic trace."""
    cycles = segment_cycles(
        trace,
        prominence_frac=config.prominence_frac,
        min_separation_frac=config.min_separation_frac,
        valley_tolerance_frac=config.valley_tolerance_frac
    )
    mc = midpoint_curve(trace, cycles, config.n_bins)
    extrema = per_cycle_extrema(trace, cycles)
    report = build_report(
        mc, trace, cycles, extrema,
        fit_intercept=config.fit_intercept,
        hysteresis_method=config.hysteresis_method,
        drift_method=config.drift_method,
        n_bins=config.n_bins
    )
    return CyclicAnalysis(report, mc, cycles, extrema)


def analyzeCyclicTest(resistanceFile: str, tensileFile: str, config: RunConfig) -> Dict[str, Any]:
    """
    Full cyclic-test analysis: report JSON/text, curve CSVs and SVG plots.

    Args:
        resistanceFile: Meter CSV (t_s,R_ohm)
        tensileFile: Tester CSV (t_s,disp_mm,force_N)
        config: Effective run configuration

    Returns:
        dict: {'outputDir': str, 'files': [str], 'report': dict, 'summary': str}
    """
    trace = synchronize(parse_resistance_log(resistanceFile), parse_tensile_log(tensileFile), config.test_config)
    analysis = analyze_cyclic_trace(trace, config)
    out = _output_dir(config.output_dir)

    files = [
        _write_text(report_to_json(analysis.report, config.to_dict()), out / REPORT_JSON_FILE),
        _write_text(render_table(metrics=analysis.report), out / REPORT_TEXT_FILE),
        write_midpoint_curve(analysis.midpoint, str(out / MIDPOINT_CURVE_FILE)),
        write_loop_curve(analysis.midpoint, str(out / LOOP_CURVE_FILE)),
        write_cycle_extrema(analysis.cycles, analysis.extrema, str(out / CYCLE_EXTREMA_FILE)),
        write_synced_trace(trace, str(out / SYNCED_TRACE_FILE)),
        generateHysteresisLoop(analysis.midpoint, str(out))['filePath'],
        generateResistanceTimeline(trace, str(out), config.plot_format)['filePath'],
    ]

    return {
        'outputDir': str(out.resolve()),
        'files': files,
        'report': analysis.report.to_dict(),
        'summary': render_table(metrics=analysis.report)
    }


# ============================================================================
# Tool: analyzeFailureTest
# ============================================================================

def analyzeFailureTest(resistanceFile: str, tensileFile: str, config: RunConfig) -> Dict[str, Any]:
    """Stretch-to-failure analysis: report JSON/text, failure curve CSV and SVG."""
    trace = synchronize(parse_resistance_log(resistanceFile), parse_tensile_log(tensileFile), config.test_config)
    report = failure_analysis(
        trace,
        force_drop_frac=config.force_drop_frac,
        force_floor=config.force_floor,
        open_ratio=config.open_ratio,
        r2_floor=config.r2_floor,
        linear_grid_start=config.linear_grid_start,
        linear_grid_step=config.linear_grid_step,
        slope_tolerance=config.slope_tolerance
    )
    out = _output_dir(config.output_dir)

    files = [
        _write_text(report_to_json(report, config.to_dict()), out / REPORT_JSON_FILE),
        _write_text(render_table(failure=report), out / REPORT_TEXT_FILE),
        write_failure_curve(trace, str(out / FAILURE_CURVE_CSV_FILE)),
        generateFailureCurve(trace, str(out), report.failure_strain)['filePath'],
    ]

    return {
        'outputDir': str(out.resolve()),
        'files': files,
        'report': report.to_dict(),
        'summary': render_table(failure=report)
    }


# ============================================================================
# Tool: calibrateAngleModel
# ============================================================================

def calibrateAngleModel(pointsFile: str, config: RunConfig, joint: Optional[str] = None) -> Dict[str, Any]:
    """Fit the dR/R -> angle model from a calibration points CSV and write it as JSON."""
    model = fit_angle_model(parse_calibration_points(pointsFile), joint)
    out = _output_dir(config.output_dir)
    path = write_angle_model(model, str(out / ANGLE_MODEL_FILE))
    summary = f"angle = {model.slope:.4f} * dR/R + {model.intercept:.4f} (R^2 {model.fit_r2:.4f})"
    return {'outputDir': str(out.resolve()), 'files': [path], 'model': model.to_dict(), 'summary': summary}


# ============================================================================
# Tool: estimateJointAngles
# ============================================================================

def estimateJointAngles(
    modelFile: str,
    resistanceFile: str,
    truthFile: str,
    config: RunConfig,
    joint: Optional[str] = None
) -> Dict[str, Any]:
    """
    Estimate angles from a sensor-only resistance log and score them against
    ground truth.

    Returns:
        dict: {'outputDir': str, 'files': [str], 'score': dict, 'summary': str}
    """
    model = load_angle_model(modelFile)
    trace = normalize_resistance(parse_resistance_log(resistanceFile), config.test_config)
    estimated = estimate_angles(model, trace)
    truth = parse_angle_log(truthFile)
    score = score_estimate(estimated, truth, config.min_angle)

    out = _output_dir(config.output_dir)
    files = [
        write_angle_trace(estimated, str(out / ESTIMATED_ANGLES_FILE)),
        _write_json(score, out / SCORE_FILE),
        generateAngleOverlay(estimated, truth, score['mape_pct'], str(out), joint or model.joint)['filePath'],
    ]
    summary = f"MAPE {score['mape_pct']:.3f}% over {score['n_scored']} samples (min angle {config.min_angle:g} deg)"
    return {'outputDir': str(out.resolve()), 'files': files, 'score': score, 'summary': summary}


# ============================================================================
# Tool: runSeedSweep
# ============================================================================

def runSeedSweep(
    config: RunConfig,
    nSeeds: int = 5,
    paramsFile: Optional[str] = None,
    baseSeed: Optional[int] = None,
    noiseSigma: Optional[float] = DEFAULT_SWEEP_NOISE,
    showProgress: bool = True
) -> Dict[str, Any]:
    """
    Simulate and analyse a cyclic test for consecutive seeds.

    Writes one metrics row per seed and a mean/std summary next to the
    noiseless expectation.

    Args:
        config: Effective run configuration
        nSeeds: Number of seeds
        paramsFile: Optional simulator params JSON
        baseSeed: First seed (default: the params seed)
        noiseSigma: Noise level for every run (None keeps the params value)
        showProgress: Show a tqdm progress bar

    Returns:
        dict: {'outputDir': str, 'files': [str], 'summary': str}
    """
    if nSeeds < 1:
        raise ValidationError('nSeeds', f"must be >= 1, got {nSeeds}")

    sensor, protocol, _ = load_sim_params(paramsFile, baseSeed)
    if noiseSigma is not None:
        sensor = replace(sensor, noise_sigma=noiseSigma)

    rows = []
    seeds = range(sensor.seed, sensor.seed + nSeeds)
    for seed in tqdm(seeds, desc='Seeds', unit='seed', disable=not showProgress):
        r_trace, ten_trace = simulate_cyclic(replace(sensor, seed=seed), protocol)
        trace = synchronize(r_trace, ten_trace, config.test_config)
        report = analyze_cyclic_trace(trace, config).report
        rows.append({'seed': seed, **report.to_dict()})

    frame = pd.DataFrame(rows)
    metrics = [column for column in frame.columns if column not in ('seed', 'n_cycles')]
    summary_document = {
        'n_seeds': nSeeds,
        'noise_sigma': sensor.noise_sigma,
        'expected': ground_truth('cyclic', sensor, proto=protocol)['expected'],
        'mean': {name: float(frame[name].mean()) for name in metrics},
        'std': {name: float(np.std(frame[name].to_numpy())) for name in metrics},
        'config': config.to_dict()
    }

    out = _output_dir(config.output_dir)
    metrics_path = out / SWEEP_METRICS_FILE
    frame.to_csv(metrics_path, index=False, lineterminator='\n')
    files = [str(metrics_path), _write_json(summary_document, out / SWEEP_SUMMARY_FILE)]

    summary = ', '.join(f"{name} {summary_document['mean'][name]:.4g} ± {summary_document['std'][name]:.2g}"
                        for name in metrics)
    return {'outputDir': str(out.resolve()), 'files': files, 'summary': summary}
