"""
Helpers shared by the CLI and the per-cycle computations:
``--set`` override parsing and the ordered worker-pool map.
"""

from multiprocessing import Pool, cpu_count
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .config import ConfigManager
from .exceptions import ConfigurationError, StretchMetricsError
from .logging_config import get_logger

logger = get_logger(__name__)


class OverrideParser:
    """
    ``key=value`` overrides from the command line.

    Accepts the repeatable form (``--set a=1 --set b=2``) and the compact
    form ``"a=1;b=2"``. Values stay strings until coerce() types them.
    """

    TRUE_VALUES = ('true', '1', 'yes', 'on')
    FALSE_VALUES = ('false', '0', 'no', 'off')
    NULL_VALUES = ('null', 'none')

    @staticmethod
    def parse(text: str) -> Dict[str, str]:
        """
        Split ``"a=1;b=2"`` into ``{'a': '1', 'b': '2'}``.

        Only the first '=' separates key from value, so ``out=a=b`` keeps
        ``a=b`` as the value.

        Raises:
            ConfigurationError: If an item has no '='
        """
        overrides: Dict[str, str] = {}
        for item in (text or '').split(';'):
            item = item.strip()
            if not item:
                continue
            key, sep, value = item.partition('=')
            if not sep:
                raise ConfigurationError(f"Override '{item}' is not of the form key=value")
            overrides[key.strip()] = value.strip()
        return overrides

    @staticmethod
    def parse_many(items: Optional[Sequence[str]]) -> Dict[str, str]:
        """Merge repeated ``key=value`` items, later items win."""
        merged: Dict[str, str] = {}
        for item in items or []:
            merged.update(OverrideParser.parse(item))
        return merged

    @staticmethod
    def coerce(key: str, raw: str, template: Any) -> Any:
        """
        Convert ``raw`` to the type of ``template`` (the setting's default).

        A None template means an optional float. 'null' or 'none' always
        gives None; range checks happen later in run_config.

        Raises:
            ConfigurationError: If the text does not read as that type
        """
        lowered = raw.lower()
        if lowered in OverrideParser.NULL_VALUES:
            return None
        if isinstance(template, bool):
            if lowered in OverrideParser.TRUE_VALUES:
                return True
            if lowered in OverrideParser.FALSE_VALUES:
                return False
            raise ConfigurationError(f"Invalid value for '{key}': {raw} (expected true/false)")
        if isinstance(template, str):
            return raw

        target = int if isinstance(template, int) else float
        try:
            return target(raw)
        except ValueError:
            raise ConfigurationError(f"Invalid value for '{key}': {raw} (expected {target.__name__})")


class MultiprocessingConfig:
    """
    Worker-pool settings from the ``multiprocessing`` section of config.yaml.

    A pool only pays off for long tests, so runs below
    ``min_cycles_for_parallel`` cycles stay in-process.
    """

    DEFAULTS = {
        'enabled': True,
        'num_workers': None,
        'min_cycles_for_parallel': 200
    }

    @staticmethod
    def get_config() -> Dict[str, Any]:
        """Settings merged over DEFAULTS; DEFAULTS alone if config.yaml cannot be read."""
        try:
            section = ConfigManager().section('multiprocessing')
        except StretchMetricsError as e:
            logger.warning(f"Worker pool settings unavailable ({e}), running with defaults")
            return dict(MultiprocessingConfig.DEFAULTS)

        settings = {key: section.get(key, default) for key, default in MultiprocessingConfig.DEFAULTS.items()}
        logger.debug(f"Worker pool settings: {settings}")
        return settings

    @staticmethod
    def get_optimal_workers(
        total_items: int,
        min_items_per_worker: int = 50,
        max_workers: Optional[int] = None
    ) -> int:
        """At least one worker, at most ``max_workers`` (default: CPU count)."""
        ceiling = max_workers if max_workers is not None else cpu_count()
        return max(1, min(ceiling, total_items // max(1, min_items_per_worker)))

    @staticmethod
    def should_use_multiprocessing(
        total_items: int,
        config: Optional[Dict[str, Any]] = None
    ) -> bool:
        settings = config if config is not None else MultiprocessingConfig.get_config()
        return bool(settings['enabled']) and total_items >= settings['min_cycles_for_parallel']

    @staticmethod
    def get_processing_params(
        total_items: int,
        override_enabled: Optional[bool] = None,
        override_num_workers: Optional[int] = None
    ) -> Tuple[bool, Optional[int]]:
        """
        Decide between pool and in-process execution.

        Args:
            total_items: Number of cycles to process
            override_enabled: Force the pool on or off (None = config.yaml)
            override_num_workers: Pool size (None = config.yaml, then auto)

        Returns:
            (use_pool, num_workers)
        """
        settings = MultiprocessingConfig.get_config()
        if override_enabled is not None:
            settings['enabled'] = override_enabled
        if override_num_workers is not None:
            settings['num_workers'] = override_num_workers

        use_pool = MultiprocessingConfig.should_use_multiprocessing(total_items, settings)
        workers = settings['num_workers']
        if use_pool and workers is None:
            workers = MultiprocessingConfig.get_optimal_workers(total_items)
        return use_pool, workers


def map_in_order(
    worker_fn: Callable[[Any], Any],
    items: List[Any],
    use_multiprocessing: Optional[bool] = None,
    num_workers: Optional[int] = None
) -> List[Any]:
    """
    Apply ``worker_fn`` to every item and return results in input order.

    Args:
        worker_fn: Picklable top-level function (or functools.partial of one)
        items: Work items
        use_multiprocessing: Force parallel on/off (None = decide from config)
        num_workers: Number of workers (None = config or auto-detect)

    Returns:
        List of results, ``results[i] == worker_fn(items[i])``
    """
    use_pool, workers = MultiprocessingConfig.get_processing_params(
        len(items),
        override_enabled=use_multiprocessing,
        override_num_workers=num_workers
    )

    if use_pool and len(items) > 1:
        logger.info(f"Processing {len(items)} cycles on {workers} worker processes")
        with Pool(processes=workers) as pool:
            return pool.map(worker_fn, items)

    return [worker_fn(item) for item in items]
