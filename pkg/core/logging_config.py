"""
Logging configuration for stretchmetrics

Every module logger is a child of the ``stretchmetrics`` package logger, which
owns the handlers: one stderr console handler (CLI stdout carries only report
text) and, on request, one detailed log file.
"""

import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Union

ROOT_LOGGER_NAME = 'stretchmetrics'

CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'

LOG_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}

# module name -> logger
_loggers: Dict[str, logging.Logger] = {}
_console: Optional[logging.StreamHandler] = None


def _level(level: Union[str, int]) -> int:
    if isinstance(level, int):
        return level
    return LOG_LEVELS.get(str(level).upper(), logging.INFO)


def default_log_file() -> Path:
    """logs/stretchmetrics_YYYYMMDD.log under the working directory."""
    log_dir = Path('logs')
    log_dir.mkdir(exist_ok=True)
    return log_dir / f"{ROOT_LOGGER_NAME}_{datetime.now().strftime('%Y%m%d')}.log"


def setup_root_logger(level: Union[str, int] = 'INFO') -> logging.Logger:
    """
    Configure the package logger once.

    Args:
        level: Console level name ('DEBUG' ... 'CRITICAL') or logging constant

    Returns:
        The ``stretchmetrics`` logger
    """
    global _console
    root = logging.getLogger(ROOT_LOGGER_NAME)
    root.setLevel(logging.DEBUG)
    root.propagate = False

    if _console is None:
        _console = logging.StreamHandler(sys.stderr)
        _console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        root.addHandler(_console)
    _console.setLevel(_level(level))
    return root


def get_logger(name: str) -> logging.Logger:
    """
    Logger for a module, e.g. ``get_logger(__name__)``.

    ``cycle_analyzer`` becomes ``stretchmetrics.cycle_analyzer``; names that
    already start with the package name are used as they are.
    """
    if name in _loggers:
        return _loggers[name]

    full_name = name if name.startswith(ROOT_LOGGER_NAME) else f"{ROOT_LOGGER_NAME}.{name}"
    logger = logging.getLogger(full_name)
    _loggers[name] = logger
    return logger


def set_log_level(level: Union[str, int]):
    """Set the console level; the log file always records DEBUG."""
    setup_root_logger(level)


def enable_file_logging(log_file: Optional[str] = None) -> Path:
    """
    Also write a detailed log to ``log_file`` (default: default_log_file()).

    Calling it again with another path moves the file handler.
    """
    path = Path(log_file) if log_file else default_log_file()
    root = logging.getLogger(ROOT_LOGGER_NAME)

    for handler in [h for h in root.handlers if isinstance(h, logging.FileHandler)]:
        if handler.baseFilename == os.path.abspath(path):
            return path
    disable_file_logging()

    path.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(path, encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
    root.addHandler(file_handler)
    return path


def disable_file_logging():
    """Close and remove the file handler, if any."""
    root = logging.getLogger(ROOT_LOGGER_NAME)
    for handler in [h for h in root.handlers if isinstance(h, logging.FileHandler)]:
        root.removeHandler(handler)
        handler.close()


setup_root_logger()
