"""Shared infrastructure: errors, config.yaml, logging and the worker pool."""

from .exceptions import (
    StretchMetricsError,
    FileNotFoundError,
    ParseError,
    AnalysisError,
    ValidationError,
    ConfigurationError
)
from .config import ConfigManager
from .logging_config import get_logger, set_log_level, enable_file_logging
from .utils import OverrideParser, MultiprocessingConfig, map_in_order

__all__ = [
    'StretchMetricsError',
    'FileNotFoundError',
    'ParseError',
    'AnalysisError',
    'ValidationError',
    'ConfigurationError',
    'ConfigManager',
    'get_logger',
    'set_log_level',
    'enable_file_logging',
    'OverrideParser',
    'MultiprocessingConfig',
    'map_in_order',
]
