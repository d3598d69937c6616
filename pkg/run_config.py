#!/usr/bin/python3
# -*- coding: utf-8 -*-
"""
Run configuration for stretchmetrics

Merges config.yaml defaults with ``--set key=value`` overrides into a frozen
RunConfig that every command consumes and echoes into its report.
"""
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Dict, Optional

from core.config import ConfigManager
from core.exceptions import ConfigurationError, ValidationError
from core.logging_config import get_logger
from core.utils import OverrideParser
from data_parser import TestConfig
from data_processor import DRIFT_METHODS, HYSTERESIS_METHODS

logger = get_logger(__name__)

PLOT_FORMATS = ('svg', 'html')

# config.yaml section -> keys it may hold
SECTIONS = {
    'test': ('gauge_length', 'baseline_window', 'sample_rate_hint', 'time_offset_s', 'baseline_resistance'),
    'cycles': ('prominence_frac', 'min_separation_frac', 'valley_tolerance_frac', 'n_bins'),
    'metrics': ('hysteresis_method', 'drift_method', 'fit_intercept'),
    'failure': ('force_drop_frac', 'force_floor', 'open_ratio', 'r2_floor',
                'linear_grid_start', 'linear_grid_step', 'slope_tolerance'),
    'calibration': ('min_angle',),
    'output': ('plot_format', 'output_dir'),
}
IGNORED_SECTIONS = ('multiprocessing', 'logging', 'version')
TEST_KEYS = SECTIONS['test']


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one command invocation."""
    test_config: TestConfig = field(default_factory=TestConfig)
    prominence_frac: float = 0.5
    min_separation_frac: float = 0.25
    valley_tolerance_frac: float = 0.1
    n_bins: int = 100
    hysteresis_method: str = 'area_ratio'
    drift_method: str = 'ols'
    fit_intercept: bool = True
    force_drop_frac: float = 0.5
    force_floor: float = 0.5
    open_ratio: float = 100.0
    r2_floor: float = 0.98
    linear_grid_start: float = 0.10
    linear_grid_step: float = 0.01
    slope_tolerance: float = 0.5
    min_angle: float = 5.0
    plot_format: str = 'svg'
    output_dir: str = 'output'

    def __post_init__(self):
        checks = (
            ('prominence_frac', 0 < self.prominence_frac <= 1, "0 < value <= 1"),
            ('min_separation_frac', 0 < self.min_separation_frac < 1, "0 < value < 1"),
            ('valley_tolerance_frac', 0 <= self.valley_tolerance_frac < 1, "0 <= value < 1"),
            ('n_bins', self.n_bins >= 2, "value >= 2"),
            ('force_drop_frac', 0 < self.force_drop_frac < 1, "0 < value < 1"),
            ('force_floor', self.force_floor >= 0, "value >= 0"),
            ('open_ratio', self.open_ratio > 0, "value > 0"),
            ('r2_floor', 0 < self.r2_floor <= 1, "0 < value <= 1"),
            ('linear_grid_start', self.linear_grid_start > 0, "value > 0"),
            ('linear_grid_step', self.linear_grid_step > 0, "value > 0"),
            ('slope_tolerance', 0 < self.slope_tolerance <= 1, "0 < value <= 1"),
            ('min_angle', self.min_angle > 0, "value > 0"),
            ('hysteresis_method', self.hysteresis_method in HYSTERESIS_METHODS, f"one of {HYSTERESIS_METHODS}"),
            ('drift_method', self.drift_method in DRIFT_METHODS, f"one of {DRIFT_METHODS}"),
            ('plot_format', self.plot_format in PLOT_FORMATS, f"one of {PLOT_FORMATS}"),
        )
        for name, ok, expected in checks:
            if not ok:
                raise ValidationError(name, f"expected {expected}, got {getattr(self, name)!r}")
        if not self.output_dir:
            raise ValidationError('output_dir', "must not be empty")

    def to_dict(self) -> Dict[str, Any]:
        """Echo block for reports, without output_dir."""
        document = asdict(self)
        document.pop('output_dir')
        return document

    def with_output_dir(self, output_dir: Optional[str]) -> 'RunConfig':
        if not output_dir:
            return self
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values['output_dir'] = str(output_dir)
        return RunConfig(**values)


def _defaults() -> Dict[str, Any]:
    run_defaults = RunConfig.__dataclass_fields__
    test_defaults = TestConfig.__dataclass_fields__
    values = {}
    for keys in SECTIONS.values():
        for key in keys:
            source = test_defaults if key in TEST_KEYS else run_defaults
            values[key] = source[key].default
    return values


def _resolve_key(key: str) -> str:
    """Map ``key`` or ``section.key`` onto a known setting name."""
    if '.' in key:
        section, name = key.split('.', 1)
        if section not in SECTIONS or name not in SECTIONS[section]:
            raise ConfigurationError(f"Unknown setting '{key}'")
        return name
    for keys in SECTIONS.values():
        if key in keys:
            return key
    raise ConfigurationError(f"Unknown setting '{key}'")


def _coerce(key: str, value: Any, template: Any) -> Any:
    """Convert a YAML or override value to the type of the default."""
    if isinstance(value, str):
        value = OverrideParser.coerce(key, value, template)
    if value is None:
        if template is not None:
            raise ConfigurationError(f"Setting '{key}' must not be null")
        return None
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"Setting '{key}' must be true or false, got {value!r}")
        return value
    if isinstance(template, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"Setting '{key}' must be an integer, got {value!r}")
        return value
    if isinstance(template, float) or template is None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"Setting '{key}' must be a number, got {value!r}")
        return float(value)
    return str(value)


def _values_from_yaml(document: Dict[str, Any], defaults: Dict[str, Any]) -> Dict[str, Any]:
    values = {}
    for section, body in document.items():
        if section in IGNORED_SECTIONS:
            continue
        if section not in SECTIONS:
            logger.warning(f"Ignoring unknown config section '{section}'")
            continue
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigurationError(f"Config section '{section}' must be a mapping")
        for key, value in body.items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"Unknown setting '{section}.{key}'")
            values[key] = _coerce(key, value, defaults[key])
    return values


def build_run_config(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, str]] = None,
    output_dir: Optional[str] = None
) -> RunConfig:
    """
    Build the effective RunConfig.

    Precedence: ``--out`` > ``--set`` overrides > config.yaml > built-in defaults.

    Args:
        config_path: Explicit config file (None = search standard locations)
        overrides: Raw ``key=value`` overrides
        output_dir: Output directory override

    Returns:
        RunConfig

    Raises:
        ConfigurationError: Missing config file, unknown key or untyped value
        ValidationError: Value outside its documented range
    """
    manager = ConfigManager()
    if config_path is not None:
        if not Path(config_path).is_file():
            raise ConfigurationError("Configuration file not found", str(config_path))
        document = manager.load_config(Path(config_path), force_reload=True)
    else:
        document = manager.load_config()

    defaults = _defaults()
    values = dict(defaults)
    values.update(_values_from_yaml(document, defaults))

    for key, raw in (overrides or {}).items():
        name = _resolve_key(key)
        values[name] = _coerce(name, raw, defaults[name])
        logger.debug(f"Override {name} = {values[name]!r}")

    test_values = {key: values.pop(key) for key in TEST_KEYS}
    run_config = RunConfig(test_config=TestConfig(**test_values), **values)
    return run_config.with_output_dir(output_dir)
