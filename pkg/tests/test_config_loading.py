"""
Tests for configuration loading (run_config.build_run_config and core.config)
"""

import pytest

from core.config import ConfigManager
from core.exceptions import ConfigurationError, FileNotFoundError, ValidationError
from data_parser import TestConfig
from run_config import RunConfig, build_run_config


class TestConfigManager:
    """Tests for the cached YAML loader"""

    def test_singleton(self):
        assert ConfigManager() is ConfigManager()

    def test_load_and_get(self, write_file):
        path = write_file('config.yaml', "cycles:\n  n_bins: 40\n")
        manager = ConfigManager()
        manager.load_config(path, force_reload=True)

        assert manager.get('cycles.n_bins') == 40
        assert manager.get('cycles.missing', 'x') == 'x'

    def test_invalid_yaml(self, write_file):
        path = write_file('config.yaml', "cycles: [1, 2\n")

        with pytest.raises(ConfigurationError):
            ConfigManager().load_config(path, force_reload=True)

    def test_top_level_must_be_mapping(self, write_file):
        path = write_file('config.yaml', "- 1\n- 2\n")

        with pytest.raises(ConfigurationError):
            ConfigManager().load_config(path, force_reload=True)

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            ConfigManager().load_config(temp_dir / 'absent.yaml')

    def test_cached_until_forced(self, write_file):
        path = write_file('config.yaml', "cycles:\n  n_bins: 40\n")
        manager = ConfigManager()
        first = manager.load_config(path)

        assert manager.load_config() is first
        assert str(manager.source) == path

    def test_section(self, write_file):
        path = write_file('config.yaml', "multiprocessing:\n  enabled: false\nlogging:\n")
        manager = ConfigManager()
        manager.load_config(path, force_reload=True)

        assert manager.section('multiprocessing') == {'enabled': False}
        assert manager.section('logging') == {}
        assert manager.section('absent') == {}

    def test_section_must_be_mapping(self, write_file):
        path = write_file('config.yaml', "cycles: 3\n")
        manager = ConfigManager()
        manager.load_config(path, force_reload=True)

        with pytest.raises(ConfigurationError):
            manager.section('cycles')

    def test_no_config_anywhere(self, temp_dir, monkeypatch, mocker):
        """Without any config.yaml the document is empty and a warning is logged"""
        monkeypatch.setattr(ConfigManager, 'candidates', staticmethod(lambda: [temp_dir / 'config.yaml']))
        mock_logger = mocker.patch('core.config.logger')

        assert ConfigManager().load_config() == {}
        assert ConfigManager().source is None
        mock_logger.warning.assert_called_once()


class TestBuildRunConfig:
    """Tests for build_run_config"""

    def test_defaults(self):
        """The shipped config.yaml agrees with the built-in defaults"""
        config = build_run_config()

        assert config == RunConfig()
        assert config.test_config == TestConfig()
        assert config.n_bins == 100
        assert config.hysteresis_method == 'area_ratio'

    def test_yaml_file(self, write_file):
        path = write_file('run.yaml', (
            "test:\n  gauge_length: 80\n"
            "metrics:\n  drift_method: endpoint\n  fit_intercept: false\n"
            "logging:\n  level: DEBUG\n"
        ))
        config = build_run_config(path)

        assert config.test_config.gauge_length == 80.0
        assert isinstance(config.test_config.gauge_length, float)
        assert config.drift_method == 'endpoint'
        assert config.fit_intercept is False
        assert config.n_bins == 100

    def test_bare_and_sectioned_overrides(self):
        config = build_run_config(overrides={'n_bins': '50', 'test.baseline_window': '1.5'})

        assert config.n_bins == 50
        assert config.test_config.baseline_window == 1.5

    def test_override_beats_file(self, write_file):
        path = write_file('run.yaml', "cycles:\n  n_bins: 40\n")
        config = build_run_config(path, overrides={'cycles.n_bins': '60'})

        assert config.n_bins == 60

    def test_output_dir_beats_everything(self):
        config = build_run_config(overrides={'output_dir': 'a'}, output_dir='b')

        assert config.output_dir == 'b'

    def test_pinned_baseline(self):
        config = build_run_config(overrides={'baseline_resistance': '2.5e6'})

        assert config.test_config.baseline_resistance == 2.5e6

    @pytest.mark.parametrize('overrides', [
        {'window': '3'},
        {'cycles.gauge_length': '80'},
        {'plotting.n_bins': '80'},
    ])
    def test_unknown_setting(self, overrides):
        with pytest.raises(ConfigurationError):
            build_run_config(overrides=overrides)

    def test_unknown_key_in_file(self, write_file):
        path = write_file('run.yaml', "cycles:\n  window: 3\n")

        with pytest.raises(ConfigurationError):
            build_run_config(path)

    def test_unknown_section_in_file_warns(self, write_file, mocker):
        logger = mocker.patch('run_config.logger')
        path = write_file('run.yaml', "plotting:\n  dpi: 300\n")

        assert build_run_config(path) == RunConfig()
        assert logger.warning.called

    def test_null_for_required_setting(self):
        with pytest.raises(ConfigurationError):
            build_run_config(overrides={'n_bins': 'null'})

    def test_wrong_type_in_file(self, write_file):
        path = write_file('run.yaml', "cycles:\n  n_bins: many\n")

        with pytest.raises(ConfigurationError):
            build_run_config(path)

    @pytest.mark.parametrize('overrides', [
        {'n_bins': '1'},
        {'hysteresis_method': 'energy'},
        {'drift_method': 'median'},
        {'plot_format': 'png'},
        {'prominence_frac': '0'},
        {'gauge_length': '0'},
        {'min_angle': '0'},
    ])
    def test_out_of_range(self, overrides):
        with pytest.raises(ValidationError):
            build_run_config(overrides=overrides)

    def test_missing_config_file(self, temp_dir):
        with pytest.raises(ConfigurationError):
            build_run_config(str(temp_dir / 'absent.yaml'))


class TestRunConfig:
    """Tests for the RunConfig value object"""

    def test_to_dict_omits_output_dir(self):
        document = RunConfig(output_dir='somewhere').to_dict()

        assert 'output_dir' not in document
        assert document['test_config']['gauge_length'] == 100.0
        assert document['n_bins'] == 100

    def test_with_output_dir(self):
        config = RunConfig()

        assert config.with_output_dir(None) is config
        assert config.with_output_dir('out2').output_dir == 'out2'
        assert config.with_output_dir('out2').n_bins == config.n_bins

    def test_empty_output_dir(self):
        with pytest.raises(ValidationError):
            RunConfig(output_dir='')
