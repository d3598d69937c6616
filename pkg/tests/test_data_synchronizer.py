"""
Tests for data_synchronizer module
"""

import numpy as np
import pytest

from core.exceptions import (
    InvalidValueError,
    NoOverlapError,
    NonMonotonicTimeError,
    ValidationError
)
from data_parser import ResistanceTrace, TestConfig
from data_synchronizer import (
    SYNCED_HEADER,
    SyncedTrace,
    normalize_resistance,
    strain_only,
    synchronize,
    write_synced_trace
)
from tests.conftest import resistance_trace, tensile_trace


@pytest.fixture
def ten_second_pair():
    """10 s of 10 Hz resistance and a 1 mm/s tensile ramp sampled at 1 Hz"""
    t_r = np.round(np.arange(0, 101) * 0.1, 10)
    r = resistance_trace(t_r, np.full(t_r.size, 2.0e6))
    t_ten = np.arange(0, 11, dtype=float)
    ten = tensile_trace(t_ten, t_ten * 1.0, force=t_ten * 0.5)
    return r, ten


class TestSynchronize:
    """Tests for synchronize"""

    def test_strain_from_crosshead(self, ten_second_pair):
        """1 mm/s over a 100 mm gauge is 0.06 strain at t = 6 s"""
        r, ten = ten_second_pair
        trace = synchronize(r, ten, TestConfig(gauge_length=100.0))

        idx = int(np.argmin(np.abs(trace.t - 6.0)))
        assert trace.strain[idx] == pytest.approx(0.06)
        assert trace.force[idx] == pytest.approx(3.0)
        assert trace.gauge_length == 100.0

    def test_resistance_timebase_is_master(self, ten_second_pair):
        """Output samples are exactly the resistance samples in the overlap"""
        r, ten = ten_second_pair
        trace = synchronize(r, ten, TestConfig())

        assert len(trace) == len(r)
        np.testing.assert_array_equal(trace.t, r.t)

    def test_constant_resistance_gives_zero_drr(self, ten_second_pair):
        r, ten = ten_second_pair
        trace = synchronize(r, ten, TestConfig())

        assert trace.r0 == pytest.approx(2.0e6)
        np.testing.assert_allclose(trace.d_r_over_r, 0.0)

    @pytest.mark.parametrize('k', [2.0, 0.5])
    def test_gauge_length_scales_strain_only(self, ten_second_pair, k):
        """k times the gauge length gives strain / k and the same dR/R"""
        r, ten = ten_second_pair
        base = synchronize(r, ten, TestConfig(gauge_length=100.0))
        scaled = synchronize(r, ten, TestConfig(gauge_length=100.0 * k))

        np.testing.assert_allclose(scaled.strain, base.strain / k, rtol=1e-12)
        np.testing.assert_array_equal(scaled.d_r_over_r, base.d_r_over_r)
        np.testing.assert_array_equal(scaled.t, base.t)

    def test_strain_zero_is_min_displacement(self):
        """Pre-loaded clamp offsets are removed from strain"""
        t = np.arange(0, 31) * 0.1
        r = resistance_trace(t, np.full(t.size, 100.0))
        ten = tensile_trace(t, 5.0 + t, force=np.zeros(t.size))
        trace = synchronize(r, ten, TestConfig(gauge_length=10.0))

        assert trace.strain[0] == pytest.approx(0.0)
        assert trace.strain.min() >= 0.0

    def test_time_offset_restricts_overlap(self, ten_second_pair):
        """Shifting the tensile log keeps only overlapping resistance samples"""
        r, ten = ten_second_pair
        trace = synchronize(r, ten, TestConfig(time_offset_s=4.0))

        assert trace.t[0] == pytest.approx(4.0)
        assert trace.t[-1] == pytest.approx(10.0)
        assert trace.strain[0] == pytest.approx(0.0)

    def test_no_overlap(self, ten_second_pair):
        r, ten = ten_second_pair

        with pytest.raises(NoOverlapError):
            synchronize(r, ten, TestConfig(time_offset_s=20.0))

    def test_overlap_shorter_than_one_second(self, ten_second_pair):
        r, ten = ten_second_pair

        with pytest.raises(NoOverlapError):
            synchronize(r, ten, TestConfig(time_offset_s=9.5))

    def test_open_circuit_kept_as_inf(self):
        """Open-circuit samples survive with infinite dR/R"""
        t = np.arange(0, 31) * 0.1
        r_values = np.full(t.size, 100.0)
        r_values[-1] = np.inf
        r = ResistanceTrace(t=t, r=r_values)
        ten = tensile_trace(t, t)
        trace = synchronize(r, ten, TestConfig())

        assert trace.open_circuit[-1]
        assert np.isinf(trace.d_r_over_r[-1])
        assert np.isinf(trace.resistance[-1])

    def test_non_uniform_timebase_warns(self, mocker):
        """A jittery resistance timebase is logged but accepted"""
        warn = mocker.patch('data_synchronizer.logger')
        t = np.concatenate((np.arange(0, 20) * 0.1, [2.05, 2.3, 2.4, 2.5]))
        r = resistance_trace(t, np.full(t.size, 100.0))
        ten = tensile_trace([0.0, 3.0], [0.0, 3.0])

        synchronize(r, ten, TestConfig())
        assert warn.warning.called


class TestStrainOnly:
    """Tests for strain_only"""

    def test_strain_at_full_displacement(self):
        """120 mm over a 100 mm gauge is 1.20 strain"""
        ten = tensile_trace([0.0, 60.0, 120.0], [0.0, 60.0, 120.0])
        series = strain_only(ten, TestConfig(gauge_length=100.0))

        assert series.strain[-1] == pytest.approx(1.20)
        np.testing.assert_array_equal(series.t, ten.t)

    def test_offset_applied_to_time(self):
        ten = tensile_trace([0.0, 1.0], [0.0, 1.0])
        series = strain_only(ten, TestConfig(time_offset_s=2.5))

        assert series.t.tolist() == [2.5, 3.5]


class TestNormalizeResistance:
    """Tests for normalize_resistance"""

    def test_sensor_only_trace(self):
        t = np.arange(0, 40) * 0.1
        r_values = np.where(t < 2.0, 100.0, 150.0)
        trace = normalize_resistance(resistance_trace(t, r_values), TestConfig())

        assert not trace.has_strain
        assert not trace.has_force
        assert trace.d_r_over_r[-1] == pytest.approx(0.5)


class TestSyncedTrace:
    """Invariants of SyncedTrace"""

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            SyncedTrace(t=[0.0, 0.1], d_r_over_r=[0.0], r0=1.0)

    def test_non_positive_r0(self):
        with pytest.raises(ValidationError):
            SyncedTrace(t=[0.0, 0.1], d_r_over_r=[0.0, 0.1], r0=0.0)

    def test_negative_strain(self):
        with pytest.raises(InvalidValueError):
            SyncedTrace(t=[0.0, 0.1], d_r_over_r=[0.0, 0.1], r0=1.0, strain=[0.0, -0.1])

    def test_non_finite_drr_needs_open_circuit(self):
        with pytest.raises(InvalidValueError):
            SyncedTrace(t=[0.0, 0.1], d_r_over_r=[0.0, np.inf], r0=1.0)

    def test_decreasing_time(self):
        with pytest.raises(NonMonotonicTimeError):
            SyncedTrace(t=[0.1, 0.0], d_r_over_r=[0.0, 0.1], r0=1.0)

    def test_sample_period(self):
        trace = SyncedTrace(t=[0.0, 0.1, 0.2], d_r_over_r=[0.0, 0.1, 0.2], r0=1.0)

        assert trace.sample_period == pytest.approx(0.1)


class TestWriteSyncedTrace:
    """Tests for write_synced_trace"""

    def test_columns_and_over(self, temp_dir):
        trace = SyncedTrace(
            t=[0.0, 0.1], d_r_over_r=[0.0, np.inf], r0=1.0,
            strain=[0.0, 0.01], force=[0.0, 1.5], open_circuit=[False, True]
        )
        path = write_synced_trace(trace, str(temp_dir / 'synced.csv'))

        lines = open(path, encoding='utf-8').read().splitlines()
        assert lines[0] == SYNCED_HEADER
        assert lines[2] == '0.1,0.01,OVER,1.5'

    def test_sensor_only_leaves_cells_empty(self, temp_dir):
        trace = SyncedTrace(t=[0.0, 0.1], d_r_over_r=[0.0, 0.25], r0=1.0)
        path = write_synced_trace(trace, str(temp_dir / 'synced.csv'))

        lines = open(path, encoding='utf-8').read().splitlines()
        assert lines[2] == '0.1,,0.25,'
