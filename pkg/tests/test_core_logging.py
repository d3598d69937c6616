"""
Tests for core.logging_config module
"""

import logging

import pytest

from core.logging_config import (
    ROOT_LOGGER_NAME,
    disable_file_logging,
    enable_file_logging,
    get_logger,
    set_log_level,
)


@pytest.fixture(autouse=True)
def restore_logging():
    yield
    disable_file_logging()
    set_log_level('INFO')


def _package_logger():
    return logging.getLogger(ROOT_LOGGER_NAME)


def test_module_logger_is_package_child():
    logger = get_logger('cycle_analyzer')
    assert logger.name == 'stretchmetrics.cycle_analyzer'
    assert get_logger('cycle_analyzer') is logger


def test_package_name_not_doubled():
    assert get_logger('stretchmetrics.cli').name == 'stretchmetrics.cli'


def test_single_console_handler():
    set_log_level('DEBUG')
    set_log_level('WARNING')
    consoles = [h for h in _package_logger().handlers if not isinstance(h, logging.FileHandler)]
    assert len(consoles) == 1
    assert consoles[0].level == logging.WARNING


def test_unknown_level_falls_back_to_info():
    set_log_level('chatty')
    consoles = [h for h in _package_logger().handlers if not isinstance(h, logging.FileHandler)]
    assert consoles[0].level == logging.INFO


def test_file_logging_records_debug(temp_dir):
    log_file = temp_dir / 'run.log'
    assert enable_file_logging(str(log_file)) == log_file

    get_logger('test_logging').debug("per-cycle detail")
    disable_file_logging()

    assert "per-cycle detail" in log_file.read_text(encoding='utf-8')


def test_file_logging_idempotent(temp_dir):
    log_file = temp_dir / 'run.log'
    enable_file_logging(str(log_file))
    enable_file_logging(str(log_file))

    files = [h for h in _package_logger().handlers if isinstance(h, logging.FileHandler)]
    assert len(files) == 1


def test_file_logging_moves_handler(temp_dir):
    enable_file_logging(str(temp_dir / 'first.log'))
    enable_file_logging(str(temp_dir / 'second.log'))

    files = [h for h in _package_logger().handlers if isinstance(h, logging.FileHandler)]
    assert len(files) == 1
    assert files[0].baseFilename.endswith('second.log')
