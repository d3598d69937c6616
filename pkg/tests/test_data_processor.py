"""
Tests for data_processor module
"""

import json

import numpy as np
import pandas as pd
import pytest

from core.exceptions import (
    AnalysisError,
    DegenerateGridError,
    MissingForceError,
    NonMonotonicStrainError,
    NonPositiveInterceptError,
    TooFewCyclesError,
    ValidationError,
    ZeroLoadingAreaError
)
from cycle_analyzer import Cycle, CycleExtrema, MidpointCurve, midpoint_curve, per_cycle_extrema, segment_cycles
from data_parser import TestConfig
from data_processor import (
    FailureMode,
    FailureReport,
    MetricsReport,
    build_report,
    cycle_hysteresis,
    drift_rates,
    failure_analysis,
    fit_line,
    gauge_factor_and_linearity,
    hysteresis_percent,
    render_table,
    report_to_json,
    write_failure_curve
)
from data_synchronizer import synchronize
from sensor_simulator import DEFAULT_DELTA_MAX, SensorParams, force_law, midline
from tests.conftest import lens_loop_trace, make_synced_trace, resistance_trace, tensile_trace, triangle_wave


def _curve(grid, values) -> MidpointCurve:
    grid = np.asarray(grid, dtype=float)
    return MidpointCurve(strain_grid=grid, mean_mid=np.asarray(values, dtype=float),
                         std_mid=np.zeros(grid.size), n_cycles=1)


def _ramp_trace(n: int = 1251, fail_idx=None, electrical: bool = False, params: SensorParams = None):
    """Stretch-to-failure trace at 1e-3 strain per sample following the simulator midline."""
    params = params or SensorParams()
    strain = np.arange(n) * 1e-3
    drr = midline(params, strain)
    force = force_law(params, strain)
    oc = np.zeros(n, dtype=bool)
    if fail_idx is not None:
        if electrical:
            oc[fail_idx:] = True
            drr = np.where(oc, np.inf, drr)
        else:
            force = force.copy()
            force[fail_idx:] = 0.05 * force[fail_idx - 1]
    return make_synced_trace(strain, drr, force=force, open_circuit=oc)


class TestFitLine:
    """Tests for fit_line"""

    def test_exact_line(self):
        x = np.linspace(0.0, 0.5, 11)
        fit = fit_line(x, 31.42 * x)

        assert fit.slope == pytest.approx(31.42)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)

    def test_hand_computed_five_points(self):
        """y = 2x with a small alternating perturbation"""
        x = [0.0, 1.0, 2.0, 3.0, 4.0]
        y = [0.0, 2.01, 4.0, 5.99, 8.0]
        fit = fit_line(x, y)

        assert fit.slope == pytest.approx(1.998)
        assert fit.intercept == pytest.approx(0.004)
        assert fit.r2 == pytest.approx(1.0 - 160e-6 / 39.9202)

    def test_constant_with_intercept_is_exact(self):
        """A flat curve is fitted exactly by a free intercept"""
        fit = fit_line([0.0, 0.1, 0.2], [0.25, 0.25, 0.25])

        assert fit.slope == pytest.approx(0.0)
        assert fit.r2 == 1.0

    def test_constant_without_intercept(self):
        fit = fit_line([0.1, 0.2, 0.3], [0.25, 0.25, 0.25], fit_intercept=False)

        assert fit.r2 == 0.0

    def test_through_origin(self):
        fit = fit_line([1.0, 2.0], [3.0, 6.0], fit_intercept=False)

        assert fit.slope == pytest.approx(3.0)
        assert fit.intercept == 0.0

    def test_no_spread(self):
        with pytest.raises(DegenerateGridError):
            fit_line([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestGaugeFactorAndLinearity:
    """Tests for gauge_factor_and_linearity"""

    def test_linear_midpoint_curve(self):
        grid = np.linspace(0.0, 0.5, 100)
        fit = gauge_factor_and_linearity(_curve(grid, 31.42 * grid))

        assert fit.slope == pytest.approx(31.42)
        assert fit.r2 == pytest.approx(1.0)

    def test_flat_curve(self):
        grid = np.linspace(0.0, 0.5, 10)
        fit = gauge_factor_and_linearity(_curve(grid, np.full(10, 0.2)))

        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert 0.0 <= fit.r2 <= 1.0

    @pytest.mark.parametrize('scale, offset', [(3.0, 0.0), (0.2, 0.0), (1.0, 0.75), (-2.0, 0.1)])
    def test_scale_and_offset_of_output(self, scale, offset):
        """Scaling dR/R scales the gauge factor; an added constant changes neither slope nor R^2"""
        grid = np.linspace(0.0, 0.5, 60)
        mid = 31.42 * grid + 0.4 * np.sin(9.0 * grid)
        base = gauge_factor_and_linearity(_curve(grid, mid))
        moved = gauge_factor_and_linearity(_curve(grid, scale * mid + offset))

        assert base.r2 < 1.0
        assert moved.slope == pytest.approx(scale * base.slope, rel=1e-9)
        assert moved.r2 == pytest.approx(base.r2, rel=1e-9)

    def test_too_few_grid_points(self):
        with pytest.raises(DegenerateGridError):
            gauge_factor_and_linearity(_curve([0.0, 0.5], [0.0, 1.0]))


class TestHysteresisPercent:
    """Tests for hysteresis_percent"""

    def test_lens_loop_matches_closed_form(self):
        """A lens loop calibrated for 22.9% is measured at 22.9%"""
        trace = lens_loop_trace(n_periods=3, samples_per_half=500, delta_max=DEFAULT_DELTA_MAX)
        h = hysteresis_percent(trace, segment_cycles(trace))

        assert h == pytest.approx(22.9, abs=0.1)

    def test_closed_loop_is_zero(self):
        trace = lens_loop_trace(n_periods=3, samples_per_half=100, delta_max=0.0)

        assert hysteresis_percent(trace, segment_cycles(trace)) == pytest.approx(0.0, abs=1e-9)

    def test_scale_invariant(self):
        """Doubling dR/R leaves the ratio unchanged"""
        single = lens_loop_trace(n_periods=2, samples_per_half=100, delta_max=1.0)
        double = make_synced_trace(single.strain, 2.0 * single.d_r_over_r)
        cycles = segment_cycles(single)

        assert hysteresis_percent(double, cycles) == pytest.approx(hysteresis_percent(single, cycles))

    def test_full_scale_method(self):
        trace = lens_loop_trace(n_periods=2, samples_per_half=200, delta_max=1.0)
        cycles = segment_cycles(trace)
        h = hysteresis_percent(trace, cycles, method='full_scale', n_bins=201)

        # max gap 2 at mid-strain over a 15.71 span
        assert h == pytest.approx(100.0 * 2.0 / 15.71, rel=1e-3)

    def test_per_cycle_values(self):
        trace = lens_loop_trace(n_periods=3, samples_per_half=100, delta_max=1.0)
        values = cycle_hysteresis(trace, segment_cycles(trace))

        assert len(values) == 3
        assert values[0] == pytest.approx(values[2])

    def test_zero_loading_area(self):
        strain = triangle_wave(2, 10)
        trace = make_synced_trace(strain, np.zeros(strain.size))

        with pytest.raises(ZeroLoadingAreaError):
            hysteresis_percent(trace, segment_cycles(trace))

    def test_unknown_method(self):
        trace = lens_loop_trace(n_periods=1, samples_per_half=10)

        with pytest.raises(ValidationError):
            hysteresis_percent(trace, [Cycle(0, 10, 20)], method='peak_gap')

    def test_no_cycles(self):
        trace = lens_loop_trace(n_periods=1, samples_per_half=10)

        with pytest.raises(TooFewCyclesError):
            hysteresis_percent(trace, [])


class TestDriftRates:
    """Tests for drift_rates"""

    @pytest.fixture
    def affine_extrema(self):
        k = np.arange(80)
        baseline = 2.5e6 * (1 + 0.00135 * k)
        peak = 5.0e6 * (1 + 0.00236 * k)
        return [CycleExtrema(b, p) for b, p in zip(baseline, peak)]

    @pytest.mark.parametrize('method', ['ols', 'endpoint'])
    def test_affine_series_recovered(self, affine_extrema, method):
        rates = drift_rates(affine_extrema, method)

        assert rates.baseline == pytest.approx(0.135, rel=1e-9)
        assert rates.peak == pytest.approx(0.236, rel=1e-9)

    def test_constant_series(self):
        rates = drift_rates([CycleExtrema(100.0, 200.0)] * 5)

        assert rates.baseline == pytest.approx(0.0, abs=1e-12)
        assert rates.peak == pytest.approx(0.0, abs=1e-12)

    def test_too_few_cycles(self):
        with pytest.raises(TooFewCyclesError):
            drift_rates([CycleExtrema(1.0, 2.0)] * 2)

    def test_non_positive_intercept(self):
        extrema = [CycleExtrema(-1.0 - k, 2.0) for k in range(4)]

        with pytest.raises(NonPositiveInterceptError):
            drift_rates(extrema)

    def test_endpoint_zero_start(self):
        extrema = [CycleExtrema(float(k), 2.0) for k in range(4)]

        with pytest.raises(NonPositiveInterceptError):
            drift_rates(extrema, method='endpoint')

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            drift_rates([CycleExtrema(1.0, 2.0)] * 3, method='median')


class TestFailureAnalysis:
    """Tests for failure_analysis"""

    def test_mechanical_failure(self):
        """Force collapsing at 1.20 strain is a mechanical failure there"""
        report = failure_analysis(_ramp_trace(fail_idx=1200))

        assert report.failure_mode == FailureMode.MECHANICAL
        assert report.failure_strain == pytest.approx(1.20)

    def test_linear_range_at_knee(self):
        """A saturating branch past 0.60 ends the linear range there"""
        report = failure_analysis(_ramp_trace(fail_idx=1200))

        assert report.linear_range_end == pytest.approx(0.60, abs=0.02)
        assert report.max_force_in_linear_range < 20.0

    def test_electrical_failure(self):
        report = failure_analysis(_ramp_trace(fail_idx=1200, electrical=True))

        assert report.failure_mode == FailureMode.ELECTRICAL
        assert report.failure_strain == pytest.approx(1.20)

    def test_earlier_event_wins(self):
        trace = _ramp_trace(fail_idx=1100, electrical=True)
        force = trace.force.copy()
        force[1150:] = 0.0
        trace = make_synced_trace(trace.strain, trace.d_r_over_r, force=force, open_circuit=trace.open_circuit)

        assert failure_analysis(trace).failure_mode == FailureMode.ELECTRICAL

    def test_no_failure(self):
        """Force still rising at the end reports the last strain"""
        report = failure_analysis(_ramp_trace(n=1001))

        assert report.failure_mode == FailureMode.NONE
        assert report.failure_strain == pytest.approx(1.0)

    def test_dr_over_r_above_open_ratio(self):
        trace = _ramp_trace(n=1001)
        drr = trace.d_r_over_r.copy()
        drr[900:] = 500.0
        trace = make_synced_trace(trace.strain, drr, force=trace.force)

        report = failure_analysis(trace)
        assert report.failure_mode == FailureMode.ELECTRICAL
        assert report.failure_strain == pytest.approx(0.9)

    def test_missing_force(self):
        strain = np.linspace(0.0, 1.0, 50)

        with pytest.raises(MissingForceError):
            failure_analysis(make_synced_trace(strain, strain))

    def test_contact_transient_during_rest_ignored(self, mocker):
        """One open-circuit sample before stretching does not end the test"""
        mock_logger = mocker.patch('data_processor.logger')
        ramp = _ramp_trace(fail_idx=1200)
        strain = np.concatenate((np.zeros(30), ramp.strain))
        drr = np.concatenate((np.zeros(30), ramp.d_r_over_r))
        force = np.concatenate((np.zeros(30), ramp.force))
        oc = np.zeros(strain.size, dtype=bool)
        oc[29] = True
        drr[29] = np.inf

        report = failure_analysis(make_synced_trace(strain, drr, force=force, open_circuit=oc))

        assert report.failure_mode == FailureMode.MECHANICAL
        assert report.failure_strain == pytest.approx(1.20)
        mock_logger.warning.assert_called_once()

    def test_requires_strain(self):
        from data_synchronizer import SyncedTrace
        trace = SyncedTrace(t=[0.0, 0.1, 0.2], d_r_over_r=[0.0, 0.1, 0.2], r0=1.0, force=[0.0, 1.0, 2.0])

        with pytest.raises(AnalysisError):
            failure_analysis(trace)

    def test_non_monotonic_strain(self):
        strain = triangle_wave(1, 20)

        with pytest.raises(NonMonotonicStrainError):
            failure_analysis(make_synced_trace(strain, strain, force=strain))

    def test_report_invariants(self):
        with pytest.raises(ValidationError):
            FailureReport(failure_strain=0.0, failure_mode=FailureMode.NONE,
                          linear_range_end=0.0, max_force_in_linear_range=0.0)
        with pytest.raises(ValidationError):
            FailureReport(failure_strain=1.0, failure_mode=FailureMode.MECHANICAL,
                          linear_range_end=1.5, max_force_in_linear_range=0.0)


class TestBuildReport:
    """Tests for build_report"""

    @pytest.fixture
    def lens_pipeline(self):
        trace = lens_loop_trace(n_periods=4, samples_per_half=250, delta_max=DEFAULT_DELTA_MAX)
        cycles = segment_cycles(trace)
        return trace, cycles, midpoint_curve(trace, cycles), per_cycle_extrema(trace, cycles)

    def test_report_fields(self, lens_pipeline):
        trace, cycles, mc, extrema = lens_pipeline
        report = build_report(mc, trace, cycles, extrema)

        assert report.gauge_factor == pytest.approx(31.42, rel=1e-6)
        assert report.linearity_r2 == pytest.approx(1.0)
        assert report.hysteresis_pct == pytest.approx(22.9, abs=0.1)
        assert report.baseline_drift_pct_per_cycle == pytest.approx(0.0, abs=1e-9)
        assert report.n_cycles == 4

    def test_deterministic(self, lens_pipeline):
        trace, cycles, mc, extrema = lens_pipeline

        first = report_to_json(build_report(mc, trace, cycles, extrema))
        second = report_to_json(build_report(mc, trace, cycles, extrema))
        assert first == second

    def test_consistent_gauge_length_keeps_metrics(self, lens_pipeline):
        """Doubling both crosshead travel and gauge length reproduces the same report"""
        source = lens_pipeline[0]
        r = resistance_trace(source.t, source.r0 * (1.0 + source.d_r_over_r))

        reports = []
        for k in (1.0, 2.0):
            ten = tensile_trace(source.t, k * 100.0 * source.strain)
            trace = synchronize(r, ten, TestConfig(gauge_length=k * 100.0))
            cycles = segment_cycles(trace)
            reports.append(build_report(midpoint_curve(trace, cycles), trace, cycles, per_cycle_extrema(trace, cycles)))

        base, scaled = reports
        assert scaled.n_cycles == base.n_cycles == 4
        assert scaled.gauge_factor == pytest.approx(base.gauge_factor, rel=1e-9)
        assert scaled.linearity_r2 == pytest.approx(base.linearity_r2, rel=1e-9)
        assert scaled.hysteresis_pct == pytest.approx(base.hysteresis_pct, rel=1e-9)
        assert scaled.baseline_drift_pct_per_cycle == pytest.approx(base.baseline_drift_pct_per_cycle, rel=1e-9, abs=1e-12)

    def test_single_cycle(self):
        trace = lens_loop_trace(n_periods=1, samples_per_half=50, delta_max=1.0)
        cycles = segment_cycles(trace)

        with pytest.raises(TooFewCyclesError):
            build_report(midpoint_curve(trace, cycles), trace, cycles, per_cycle_extrema(trace, cycles))

    def test_report_invariants(self):
        with pytest.raises(ValidationError):
            MetricsReport(gauge_factor=1.0, linearity_r2=1.5, hysteresis_pct=0.0,
                          baseline_drift_pct_per_cycle=0.0, peak_drift_pct_per_cycle=0.0, n_cycles=3)


class TestRendering:
    """JSON, table and CSV output"""

    def test_json_has_config_echo(self):
        report = MetricsReport(31.42, 0.99, 22.9, 0.135, 0.236, 80)
        document = json.loads(report_to_json(report, {'n_bins': 100}))

        assert document['gauge_factor'] == 31.42
        assert document['n_cycles'] == 80
        assert document['config'] == {'n_bins': 100}

    def test_failure_mode_serialised_as_text(self):
        report = FailureReport(1.2, FailureMode.MECHANICAL, 0.6, 15.0)
        document = json.loads(report_to_json(report))

        assert document['failure_mode'] == 'mechanical'

    def test_table_rows(self):
        table = render_table(
            MetricsReport(31.42, 0.99, 22.9, 0.135, 0.236, 80),
            FailureReport(1.2, FailureMode.MECHANICAL, 0.6, 15.0)
        )

        assert 'Sensitivity (GF)' in table
        assert '31.42' in table
        assert 'Stretchability [%]' in table
        assert '120' in table

    def test_failure_curve_marks_open_circuit(self, temp_dir):
        trace = _ramp_trace(n=1300, fail_idx=1200, electrical=True)
        path = write_failure_curve(trace, str(temp_dir / 'failure_curve.csv'))

        frame = pd.read_csv(path, keep_default_na=False)
        assert list(frame.columns) == ['strain', 'dR_over_R', 'force_N']
        assert frame['dR_over_R'].iloc[-1] == 'OVER'
