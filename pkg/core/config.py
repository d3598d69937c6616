"""
config.yaml loading for stretchmetrics

A single cached document shared by run_config, the worker-pool settings and
the CLI logging setup.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from .exceptions import ConfigurationError, FileNotFoundError as CustomFileNotFoundError
from .logging_config import get_logger

logger = get_logger(__name__)

CONFIG_FILE_NAME = 'config.yaml'
PROJECT_DIR = Path(__file__).resolve().parent.parent


class ConfigManager:
    """
    Process-wide cache of the active config.yaml (singleton).

    Without an explicit path the working directory is searched first, then
    the project directory holding the shipped defaults.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._document = None
            cls._instance._source = None
        return cls._instance

    @property
    def source(self) -> Optional[Path]:
        """Path of the loaded file (None before loading or without a file)."""
        return self._source

    @staticmethod
    def candidates() -> List[Path]:
        return [Path.cwd() / CONFIG_FILE_NAME, PROJECT_DIR / CONFIG_FILE_NAME]

    def find_config(self) -> Optional[Path]:
        for path in self.candidates():
            if path.is_file():
                logger.debug(f"Found config file: {path}")
                return path
        return None

    def load_config(
        self,
        config_path: Optional[Union[str, Path]] = None,
        force_reload: bool = False
    ) -> Dict[str, Any]:
        """
        Load config.yaml, or return the cached document.

        Args:
            config_path: Explicit file; None searches candidates()
            force_reload: Re-read even when the same file is cached

        Returns:
            Top-level mapping (empty when no file exists)

        Raises:
            FileNotFoundError: If an explicit path does not exist
            ConfigurationError: If the YAML is malformed or not a mapping
        """
        path = Path(config_path) if config_path is not None else None
        if self._document is not None and not force_reload and path in (None, self._source):
            return self._document

        if path is None:
            path = self.find_config()
            if path is None:
                logger.warning("No config.yaml found, using built-in defaults")
                self._document, self._source = {}, None
                return self._document
        elif not path.is_file():
            raise CustomFileNotFoundError(str(path), f"Configuration file not found: {path}")

        try:
            with open(path, 'r', encoding='utf-8') as f:
                document = yaml.safe_load(f)
        except (yaml.YAMLError, UnicodeDecodeError) as e:
            raise ConfigurationError(f"Invalid YAML format: {e}", str(path))

        if document is None:
            document = {}
        if not isinstance(document, dict):
            raise ConfigurationError("Top level must be a mapping", str(path))

        self._document, self._source = document, path
        logger.info(f"Loaded configuration from: {path}")
        return document

    def section(self, name: str) -> Dict[str, Any]:
        """One top-level section as a mapping (empty when absent or null)."""
        body = self.load_config().get(name)
        if body is None:
            return {}
        if not isinstance(body, dict):
            source = str(self._source) if self._source else None
            raise ConfigurationError(f"Config section '{name}' must be a mapping", source)
        return body

    def get(self, key: str, default: Any = None) -> Any:
        """Value at a dotted key such as ``logging.level``."""
        value: Any = self.load_config()
        for part in key.split('.'):
            if not isinstance(value, dict) or part not in value:
                return default
            value = value[part]
        return value

    def clear_cache(self):
        self._document = None
        self._source = None
