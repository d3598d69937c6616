#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Command-line entry point for stretchmetrics

Usage:
    python main.py simulate cyclic|failure|motion [--params p.json] [--seed N]
    python main.py analyze cyclic|failure <resistance.csv> <tensile.csv>
    python main.py calibrate <calibration_points.csv> [--joint elbow|knee]
    python main.py estimate <angle_model.json> <resistance.csv> <truth_angles.csv>
    python main.py sweep [--seeds 5] [--noise 0.002]

Common flags: --config <config.yaml>, --out <dir>, --set key=value (repeatable),
--log-level, --log-file. STRETCHMETRICS_SEED overrides the simulator seed.

Exit status: 0 success, 1 data/analysis error, 2 usage/config error.
"""

import argparse
import os
import sys
from typing import Any, Callable, Dict, List, Optional

from core.config import ConfigManager
from core.exceptions import (
    AnalysisError,
    ConfigurationError,
    FileNotFoundError as CustomFileNotFoundError,
    ParseError,
    StretchMetricsError,
    ValidationError
)
from core.logging_config import enable_file_logging, get_logger, set_log_level
from core.utils import OverrideParser
from report_writer import (
    ANALYSIS_KINDS,
    SIMULATION_KINDS,
    analyzeCyclicTest,
    analyzeFailureTest,
    calibrateAngleModel,
    estimateJointAngles,
    runSeedSweep,
    simulateTest
)
from run_config import RunConfig, build_run_config

logger = get_logger(__name__)

SEED_ENV_VAR = 'STRETCHMETRICS_SEED'
EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2
JOINTS = ('elbow', 'knee')


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per pipeline tool."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='config.yaml path (default: search standard locations)')
    common.add_argument('--out', help='output directory (overrides output.output_dir)')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='override a setting; repeatable')
    common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'])
    common.add_argument('--log-file', help='also write a detailed log to this file')

    parser = argparse.ArgumentParser(
        prog='stretchmetrics',
        description='Characterise stretchable resistive strain sensors'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    simulate = commands.add_parser('simulate', parents=[common], help='write synthetic instrument logs')
    simulate.add_argument('kind', choices=SIMULATION_KINDS)
    simulate.add_argument('--params', help='simulator params JSON (sections sensor/protocol/motion)')
    simulate.add_argument('--seed', type=int, help=f'simulator seed (overrides {SEED_ENV_VAR})')

    analyze = commands.add_parser('analyze', parents=[common], help='compute metrics from instrument logs')
    analyze.add_argument('kind', choices=ANALYSIS_KINDS)
    analyze.add_argument('resistance', help='meter CSV (t_s,R_ohm)')
    analyze.add_argument('tensile', help='tester CSV (t_s,disp_mm,force_N)')

    calibrate = commands.add_parser('calibrate', parents=[common], help='fit the dR/R to angle model')
    calibrate.add_argument('points', help='calibration CSV (dR_over_R,angle_deg)')
    calibrate.add_argument('--joint', choices=JOINTS)

    estimate = commands.add_parser('estimate', parents=[common], help='estimate and score joint angles')
    estimate.add_argument('model', help='angle model JSON from calibrate')
    estimate.add_argument('resistance', help='meter CSV recorded during motion')
    estimate.add_argument('truth', help='ground-truth CSV (t_s,angle_deg)')
    estimate.add_argument('--joint', choices=JOINTS)

    sweep = commands.add_parser('sweep', parents=[common], help='simulate and analyse across seeds')
    sweep.add_argument('--seeds', type=int, default=5, help='number of seeds (default: 5)')
    sweep.add_argument('--params', help='simulator params JSON')
    sweep.add_argument('--seed', type=int, help='first seed')
    sweep.add_argument('--noise', type=float, default=0.002, help='noise_sigma for every run (default: 0.002)')
    sweep.add_argument('--no-progress', action='store_true', help='hide the progress bar')

    return parser


def seed_from_env() -> Optional[int]:
    """Seed from STRETCHMETRICS_SEED, if set."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{SEED_ENV_VAR} must be an integer, got '{raw}'")


def _seed(args: argparse.Namespace) -> Optional[int]:
    return args.seed if args.seed is not None else seed_from_env()


def _configure_logging(args: argparse.Namespace) -> None:
    level = args.log_level or ConfigManager().get('logging.level')
    if level:
        set_log_level(str(level))
    log_file = args.log_file or ConfigManager().get('logging.file')
    if log_file:
        enable_file_logging(str(log_file))


# ============================================================================
# Commands
# ============================================================================

def cmd_simulate(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    return simulateTest(args.kind, config.output_dir, args.params, _seed(args))


def cmd_analyze(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    analyze = analyzeCyclicTest if args.kind == 'cyclic' else analyzeFailureTest
    return analyze(args.resistance, args.tensile, config)


def cmd_calibrate(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    return calibrateAngleModel(args.points, config, args.joint)


def cmd_estimate(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    return estimateJointAngles(args.model, args.resistance, args.truth, config, args.joint)


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    return runSeedSweep(config, args.seeds, args.params, _seed(args), args.noise, not args.no_progress)


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Dict[str, Any]]] = {
    'simulate': cmd_simulate,
    'analyze': cmd_analyze,
    'calibrate': cmd_calibrate,
    'estimate': cmd_estimate,
    'sweep': cmd_sweep,
}


def _fail(error: StretchMetricsError, status: int) -> int:
    logger.debug(f"Command failed with {type(error).__name__}")
    print(f"{error.error_name}: {error}", file=sys.stderr)
    return status


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit status.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        0 on success, 1 on data/analysis errors, 2 on usage/config errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE_ERROR

    try:
        config = build_run_config(args.config, OverrideParser.parse_many(args.set), args.out)
        _configure_logging(args)
        result = COMMANDS[args.command](args, config)
    except (ValidationError, ConfigurationError) as e:
        return _fail(e, EXIT_USAGE_ERROR)
    except (ParseError, AnalysisError, CustomFileNotFoundError) as e:
        return _fail(e, EXIT_DATA_ERROR)
    except OSError as e:
        missing = CustomFileNotFoundError(str(e.filename), f"Cannot access {e.filename}: {e.strerror or e}")
        return _fail(missing, EXIT_DATA_ERROR)

    print(result['summary'].rstrip('\n'))
    for path in result.get('files', []):
        print(f"  {path}")
    return EXIT_OK


def main():
    """Main entry point"""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
