"""
Unit tests for bakerspec spectral form factor analysis
"""

import pytest
import sys
import os

import numpy as np
import pandas as pd

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from errors import PreconditionError
from linalg_core import SpectrumData, eigendecompose
from quantizer import build_map, preset_spec
from rmt_ensembles import EnsembleSpec, haar_unitary, sample
from sff_analysis import (
    SffSeries, analyze_spectrum, average_sff, coe_reference, default_ell, default_fit_points,
    default_threshold, fit_slope, outlier_threshold, sff, slope_scan, smooth_slopes, two_block_reference,
)
from conftest import equally_spaced_angles


def linear_series(N=100, T=30, slope=2.0):
    """Series whose raw and averaged values are exactly slope·τ"""
    times = np.arange(1, T + 1)
    values = slope * times / N
    return SffSeries(N=N, times=times, raw=values, averaged=values, ell=1)


class TestRawSff:
    """Test cases for the raw SFF"""

    def test_picket_fence(self):
        """Test equally spaced levels vanish until t = N"""
        N = 16
        series = sff(SpectrumData(angles=equally_spaced_angles(N)), N + 1)
        assert np.allclose(series.raw[:N - 1], 0.0, atol=1e-12)
        assert series.raw[N - 1] == pytest.approx(N)
        assert series.T == N + 1

    def test_single_time_against_trace(self, rng):
        """Test SFF(t) = |tr U^t|²/N"""
        U = haar_unitary(20, rng=rng).entries
        series = sff(eigendecompose(U), 3)
        exact = abs(np.trace(np.linalg.matrix_power(U, 3))) ** 2 / 20
        assert series.raw[2] == pytest.approx(exact, rel=1e-8)

    def test_matches_matrix_powers_for_a_map(self):
        """Test the eigenangle sum agrees with |tr Û^t|²/N for t ≤ 20"""
        U = build_map(preset_spec('Shor', 2, 64)).entries
        series = sff(eigendecompose(U), 20)
        power = np.eye(64, dtype=complex)
        for t in range(1, 21):
            power = power @ U
            assert series.raw[t - 1] == pytest.approx(abs(np.trace(power)) ** 2 / 64, abs=1e-6 * 64)

    def test_chunking_is_transparent(self, rng):
        """Test times beyond one chunk agree with a direct evaluation"""
        angles = np.sort(rng.uniform(0, 2 * np.pi, 30))
        series = sff(SpectrumData(angles=angles), 600)
        t = 555
        direct = abs(np.exp(1j * t * angles).sum()) ** 2 / 30
        assert series.raw[t - 1] == pytest.approx(direct)

    def test_positive_t(self):
        """Test T < 1 is rejected"""
        with pytest.raises(PreconditionError):
            sff(SpectrumData(angles=np.array([0.0, 1.0])), 0)

    def test_to_frame(self):
        """Test the (t, tau, raw, averaged) layout"""
        frame = linear_series().to_frame()
        assert list(frame.columns) == ['t', 'tau', 'raw', 'averaged']


class TestMovingAverage:
    """Test cases for the neighbour moving average"""

    def test_windows(self):
        """Test early, interior and truncated windows on a linear signal"""
        times = np.arange(1, 11)
        series = SffSeries(N=10, times=times, raw=times.astype(float))
        averaged = average_sff(series, 2).averaged
        # t ≤ ℓ uses [1, 2t−1]; interior [t−ℓ, t+ℓ]; the last windows stop at T
        assert averaged[0] == pytest.approx(1.0)
        assert averaged[1] == pytest.approx(2.0)
        assert averaged[4] == pytest.approx(5.0)
        assert averaged[8] == pytest.approx(np.mean([7, 8, 9, 10]))
        assert averaged[9] == pytest.approx(np.mean([8, 9, 10]))

    def test_constant_signal(self):
        """Test a constant signal is unchanged"""
        series = SffSeries(N=50, times=np.arange(1, 51), raw=np.full(50, 0.7))
        assert np.allclose(average_sff(series, 5).averaged, 0.7)

    def test_bad_ell(self):
        """Test ℓ < 1 is rejected"""
        with pytest.raises(PreconditionError):
            average_sff(linear_series(), 0)


class TestDefaults:
    """Test cases for the size-dependent defaults"""

    def test_ell(self):
        """Test ℓ switches at N = 1000"""
        assert default_ell(999) == 20
        assert default_ell(1000) == 40

    def test_fit_points(self):
        """Test f breakpoints at 1000 and 5000"""
        assert default_fit_points(500) == 20
        assert default_fit_points(1000) == 40
        assert default_fit_points(4999) == 40
        assert default_fit_points(5000) == 60

    def test_threshold(self):
        """Test the A=15 threshold"""
        assert default_threshold(2) == 100.0
        assert default_threshold(None) == 100.0
        assert default_threshold(15) == 400.0


class TestFitSlope:
    """Test cases for the slope fit"""

    def test_exact_line(self):
        """Test a perfect line through the origin"""
        fit = fit_slope(linear_series(slope=2.0), f=20)
        assert fit.slope == pytest.approx(2.0)
        assert fit.scaled_residual == pytest.approx(0.0, abs=1e-9)
        assert not fit.is_outlier

    def test_outlier_flag(self):
        """Test a large residual marks the fit as an outlier"""
        series = linear_series(N=100, T=30)
        noisy = series.averaged.copy()
        noisy[::2] += 5.0
        fit = fit_slope(SffSeries(N=100, times=series.times, raw=noisy, averaged=noisy, ell=1),
                        f=20, threshold=100.0)
        assert fit.is_outlier
        assert fit.threshold == pytest.approx(100.0 ** 2 * 20)
        assert fit.scaled_residual > fit.threshold

    def test_residual_norms(self):
        """Test sse equals f·rms² on the same data"""
        series = linear_series(N=100, T=30)
        bumped = series.averaged + 0.01 * np.cos(series.times)
        series = SffSeries(N=100, times=series.times, raw=bumped, averaged=bumped, ell=1)
        rms = fit_slope(series, f=20, residual_norm='rms').scaled_residual
        sse = fit_slope(series, f=20, residual_norm='sse').scaled_residual
        assert sse == pytest.approx(20 * rms ** 2)

    def test_outlier_threshold(self):
        """Test thresholds are read per fitted point in either norm"""
        assert outlier_threshold(100.0, 40, 'sse') == pytest.approx(400000.0)
        assert outlier_threshold(400.0, 20, 'sse') == pytest.approx(3.2e6)
        assert outlier_threshold(100.0, 40, 'rms') == pytest.approx(100.0)
        with pytest.raises(PreconditionError):
            outlier_threshold(100.0, 40, 'max')

    def test_norms_flag_the_same_fits(self):
        """Test the sse and rms cut-offs agree on which fits are outliers"""
        series = linear_series(N=100, T=30)
        for bump in (0.5, 0.9, 1.1, 3.0):
            noisy = series.averaged + bump * np.cos(np.pi * series.times)
            bumped = SffSeries(N=100, times=series.times, raw=noisy, averaged=noisy, ell=1)
            sse = fit_slope(bumped, f=20, threshold=100.0, residual_norm='sse')
            rms = fit_slope(bumped, f=20, threshold=100.0, residual_norm='rms')
            assert sse.is_outlier == rms.is_outlier

    def test_preconditions(self):
        """Test missing averages, long fits and unknown norms are rejected"""
        series = linear_series(T=10)
        with pytest.raises(PreconditionError):
            fit_slope(SffSeries(N=100, times=series.times, raw=series.raw), f=5)
        with pytest.raises(PreconditionError):
            fit_slope(series, f=11)
        with pytest.raises(PreconditionError):
            fit_slope(series, f=5, residual_norm='l1')

    def test_analyze_spectrum_lengths(self):
        """Test analyze_spectrum evaluates the SFF up to f + ℓ"""
        spectrum = eigendecompose(sample(EnsembleSpec('CUE', 60, seed=0)))
        series, fit = analyze_spectrum(spectrum, ell=5, f=10)
        assert series.T == 15
        assert series.ell == 5
        assert fit.f == 10

    @pytest.mark.slow
    @pytest.mark.parametrize('kind,expected', [('CUE', 1.0), ('COE', 2.0)])
    def test_ensemble_slopes(self, kind, expected):
        """Test CUE and COE early-time slopes approach 1 and 2"""
        slopes = []
        for seed in range(4):
            spectrum = eigendecompose(sample(EnsembleSpec(kind, 800, seed=seed)))
            slopes.append(analyze_spectrum(spectrum)[1].slope)
        assert np.mean(slopes) == pytest.approx(expected, rel=0.25)


class TestReferences:
    """Test cases for the COE reference curves"""

    def test_small_tau(self):
        """Test the COE form factor starts as 2τ"""
        assert coe_reference([1e-4])[0] == pytest.approx(2e-4, rel=1e-3)

    def test_continuity_at_one(self):
        """Test both branches meet at τ = 1"""
        below = coe_reference([1.0 - 1e-9])[0]
        above = coe_reference([1.0 + 1e-9])[0]
        assert below == pytest.approx(2 - np.log(3))
        assert above == pytest.approx(below, abs=1e-6)

    def test_late_time_limit(self):
        """Test the form factor saturates at 1"""
        assert coe_reference([1e4])[0] == pytest.approx(1.0, abs=1e-6)

    def test_two_block(self):
        """Test the 2-block reference is the COE curve at 2τ"""
        tau = np.array([0.1, 0.4, 0.7])
        assert np.allclose(two_block_reference(tau), coe_reference(2 * tau))

    def test_non_positive_tau(self):
        """Test τ ≤ 0 is rejected"""
        with pytest.raises(PreconditionError):
            coe_reference([0.0, 0.5])


class TestSlopeScan:
    """Test cases for smoothing and the slope scan"""

    def test_smooth_slopes(self):
        """Test the neighbour mean skips outliers and leaves them NaN"""
        table = pd.DataFrame({'N': [10, 15, 30, 18], 'slope': [1.0, 3.0, 5.0, 100.0],
                              'outlier': [False, False, False, True]})
        smoothed = smooth_slopes(table, radius=10)
        assert smoothed.iloc[0] == pytest.approx(2.0)
        assert smoothed.iloc[1] == pytest.approx(2.0)
        assert smoothed.iloc[2] == pytest.approx(5.0)
        assert np.isnan(smoothed.iloc[3])

    def test_scan_with_failing_spec(self):
        """Test one failing spec becomes an error row without stopping the scan"""
        specs = [preset_spec('BV', 2, n) for n in (100, 102, 104)]

        def source(spec):
            if spec.N == 102:
                raise RuntimeError('solver exploded')
            return eigendecompose(haar_unitary(spec.N, seed=spec.N))

        table = slope_scan(specs, source=source, jobs=2)
        assert table['N'].tolist() == [100, 102, 104]
        failed = table[table['N'] == 102].iloc[0]
        assert 'solver exploded' in failed['error']
        assert failed['outlier']
        assert np.isnan(failed['slope'])
        assert np.isnan(failed['smoothed'])
        assert (table.loc[table['N'] != 102, 'error'] == '').all()

    def test_scan_rejects_mixed_groups(self):
        """Test specs must share family and A"""
        with pytest.raises(PreconditionError):
            slope_scan([preset_spec('BV', 2, 40), preset_spec('BV', 4, 40)])
        with pytest.raises(PreconditionError):
            slope_scan([])

    def test_injected_outlier_is_the_only_one_flagged(self):
        """Test a fully degenerate spectrum is the single outlier of a clean scan"""
        specs = [preset_spec('Sar', 2, n) for n in range(100, 122, 2)]

        def source(spec):
            if spec.N == 110:
                return SpectrumData(angles=np.zeros(spec.N))
            return SpectrumData(angles=equally_spaced_angles(spec.N))

        table = slope_scan(specs, source=source, jobs=1)
        assert table.loc[table['outlier'], 'N'].tolist() == [110]
        assert np.isnan(table.loc[table['N'] == 110, 'smoothed']).all()
        assert np.allclose(table.loc[table['N'] != 110, 'smoothed'], 0.0, atol=1e-9)

    def test_saraceno_scan_has_no_outliers(self):
        """Test the default cut-off keeps every fit of a small Saraceno scan"""
        table = slope_scan([preset_spec('Sar', 2, n) for n in range(200, 212, 2)], jobs=1)
        assert (table['error'] == '').all()
        assert not table['outlier'].any()


class TestSlopeDichotomy:
    """Test cases for the early-time slopes of the map families near N = 1000"""

    @staticmethod
    def scan(preset, A, random_phases):
        start = 1000 // A - 5
        specs = [preset_spec(preset, A, A * k, seed=A * k if random_phases else None)
                 for k in range(start, start + 10)]
        return slope_scan(specs, jobs=2)

    @pytest.mark.slow
    @pytest.mark.parametrize('A', [2, 10])
    @pytest.mark.parametrize('preset', ['BV', 'Sar', 'Gen0.2,0.7', 'Shor'])
    def test_phases_halve_the_slope(self, preset, A):
        """Test phaseless maps give slopes near 4 and random block phases near 2"""
        plain = self.scan(preset, A, random_phases=False)
        phased = self.scan(preset, A, random_phases=True)
        for table in (plain, phased):
            assert table['outlier'].mean() < 0.1
        kept = plain.loc[~plain['outlier'], 'smoothed']
        assert ((kept >= 3.0) & (kept <= 5.0)).mean() >= 0.9
        assert phased.loc[~phased['outlier'], 'smoothed'].mean() == pytest.approx(2.0, abs=0.7)
