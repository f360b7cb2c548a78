import numpy as np
import pytest

from dcd.decompose import (
    StlParams,
    decompose_all,
    default_period_candidates,
    leakage,
    lowpass_window,
    select_period,
    stl,
    trend_window,
)
from dcd.errors import AllComponentsDegenerateError, PeriodTooLargeError, SeriesTooShortError
from dcd.synth import SynthSpec, generate, generate_projection_system
from dcd.timeseries import TimeSeriesMatrix

from .oracles import ar1, periodogram_peak_period, phase_means_pattern


class TestWindows:
    def test_trend_window_matches_rule(self):
        # 1.5 * 12 / (1 - 1.5/7) = 22.909... -> 23
        assert trend_window(12) == 23
        assert trend_window(25) == 49

    def test_lowpass_strictly_exceeds_period(self):
        assert lowpass_window(12) == 13
        assert lowpass_window(13) == 15

    def test_default_candidates(self):
        assert list(default_period_candidates(480)) == list(range(4, 65))
        assert list(default_period_candidates(100)) == list(range(4, 34))


class TestStl:
    def test_pure_sine_captured(self):
        t = np.arange(240)
        x = 2.0 * np.sin(2 * np.pi * t / 12)
        trend, seasonal, residual = stl(x, 12)
        total = x.var(ddof=1)
        assert seasonal.var(ddof=1) >= 0.99 * total
        assert residual.var(ddof=1) <= 0.01 * total
        # direct per-phase cycle-mean extraction oracle
        oracle = phase_means_pattern(x, 12)
        assert np.abs(seasonal - oracle).max() < 1e-6

    def test_constant_series(self):
        x = np.full(120, 7.5)
        trend, seasonal, residual = stl(x, 12)
        assert np.abs(trend - 7.5).max() < 1e-9
        assert np.abs(seasonal).max() < 1e-9
        assert np.abs(residual).max() < 1e-9

    def test_linear_ramp_has_no_seasonal(self):
        t = np.arange(240, dtype=float)
        x = 0.3 * t
        _, seasonal, _ = stl(x, 12)
        assert seasonal.var(ddof=1) <= 1e-3 * x.var(ddof=1)
        oracle = phase_means_pattern(x - x.mean() - (t - t.mean()) * 0.3, 12)
        assert np.abs(oracle).max() < 1e-9

    def test_additive_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(60, 400))
            period = int(rng.integers(4, max(5, n // 3)))
            x = rng.standard_normal(n) * rng.uniform(0.1, 50)
            trend, seasonal, residual = stl(x, period)
            assert np.abs(trend + seasonal + residual - x).max() < 1e-9

    def test_cycle_means_zero_after_demeaning(self):
        rng = np.random.default_rng(1)
        x = np.sin(2 * np.pi * np.arange(240) / 12) + 0.3 * rng.standard_normal(240)
        _, seasonal, _ = stl(x, 12)
        for start in range(0, 240, 12):
            assert abs(seasonal[start : start + 12].mean()) <= 1e-6

    def test_exact_periodicity_for_noiseless_input(self):
        t = np.arange(360)
        x = 1.5 * np.sin(2 * np.pi * t / 12) + 0.5 * np.cos(4 * np.pi * t / 12)
        _, seasonal, _ = stl(x, 12)
        within_phase_std = max(seasonal[p::12].std() for p in range(12))
        assert within_phase_std <= 1e-6

    def test_errors(self):
        with pytest.raises(SeriesTooShortError):
            stl(np.arange(5.0), 2)
        with pytest.raises(PeriodTooLargeError):
            stl(np.arange(30.0), 11)
        with pytest.raises(PeriodTooLargeError):
            stl(np.arange(30.0), 1)

    def test_robust_params_accepted(self):
        rng = np.random.default_rng(2)
        x = np.sin(2 * np.pi * np.arange(120) / 12) + 0.1 * rng.standard_normal(120)
        x[50] += 20.0  # outlier
        trend, seasonal, residual = stl(x, 12, StlParams(robust=True))
        assert np.abs(trend + seasonal + residual - x).max() < 1e-9


class TestSelectPeriod:
    def test_sine_with_noise_matches_periodogram_oracle(self):
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = np.sin(2 * np.pi * np.arange(480) / 12) + 0.1 * rng.standard_normal(480)
            period, _ = select_period(x, range(6, 31))
            oracle = periodogram_peak_period(x, 6, 31)
            assert round(oracle) == 12
            wins += period == 12
        assert wins == 10

    def test_white_noise_rejected(self):
        none_count = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            period, _ = select_period(rng.standard_normal(480), tau=0.1)
            none_count += period is None
        assert none_count >= 90

    def test_two_period_sum(self):
        rng = np.random.default_rng(5)
        t = np.arange(480)
        x = np.sin(2 * np.pi * t / 12) + np.sin(2 * np.pi * t / 24)
        x = x + 0.05 * rng.standard_normal(480)
        period, score = select_period(x, range(6, 31))
        assert period in (12, 24)
        assert score >= 0.1

    def test_affine_invariance_of_argmax(self):
        rng = np.random.default_rng(6)
        x = 2.5 * np.sin(2 * np.pi * np.arange(480) / 18) + 0.2 * rng.standard_normal(480)
        p1, v1 = select_period(x, range(6, 31))
        p2, v2 = select_period(17.0 - 3.0 * x, range(6, 31))
        assert p1 == p2 == 18
        assert v1 == pytest.approx(v2, rel=1e-9)

    def test_candidates_too_large_are_skipped(self):
        x = np.sin(2 * np.pi * np.arange(60) / 12)
        period, _ = select_period(x, [50, 90], tau=0.1)
        assert period is None

    def test_constant_series(self):
        period, score = select_period(np.full(200, 3.0))
        assert period is None and score == 0.0


class TestDecomposeAll:
    def test_generator_seasonal_flags(self):
        hits = 0
        for seed in range(10):
            matrix, truth = generate(SynthSpec(n=1000, d=4, lag=2, seed=seed))
            dec = decompose_all(matrix)
            flagged = {i for i, v in enumerate(dec.variables) if v.is_seasonal}
            hits += flagged == set(truth.seasonal_vars)
        assert hits >= 9

    def test_constant_single_variable(self):
        matrix = TimeSeriesMatrix(values=np.full((120, 1), 2.0), var_names=("c",))
        dec = decompose_all(matrix)
        var = dec[0]
        assert not var.is_seasonal
        assert np.abs(var.seasonal).max() == 0.0
        assert np.abs(var.residual).max() < 1e-9

    def test_projection_system_both_seasonal_period_12(self):
        matrix, _ = generate_projection_system(n=1000, period=12, seed=0)
        dec = decompose_all(matrix)
        assert dec[0].is_seasonal and dec[0].period == 12
        assert dec[1].is_seasonal and dec[1].period == 12

    def test_additive_identity_every_variable(self):
        matrix, _ = generate(SynthSpec(n=500, d=4, lag=2, seed=3))
        dec = decompose_all(matrix)
        for i, var in enumerate(dec.variables):
            recon = var.trend + var.seasonal + var.residual
            assert np.abs(recon - matrix.values[:, i]).max() < 1e-9

    def test_deterministic(self):
        matrix, _ = generate(SynthSpec(n=500, d=3, lag=2, seed=4))
        a = decompose_all(matrix)
        b = decompose_all(matrix)
        for va, vb in zip(a.variables, b.variables):
            assert va.period == vb.period
            assert np.array_equal(va.trend, vb.trend)
            assert np.array_equal(va.seasonal, vb.seasonal)

    def test_error_carries_variable_name(self):
        matrix = TimeSeriesMatrix(values=np.random.default_rng(0).normal(size=(9, 1)), var_names=("short",))
        with pytest.raises(PeriodTooLargeError, match="short"):
            decompose_all(matrix, candidates=[4], tau=0.0)


class TestLeakage:
    def _manual_decomposition(self, components):
        from dcd.decompose import DecompositionResult, VariableDecomposition

        out = []
        for i, (trend, seasonal, residual) in enumerate(components):
            out.append(
                VariableDecomposition(
                    name=f"x{i}",
                    trend=np.asarray(trend, dtype=float),
                    seasonal=np.asarray(seasonal, dtype=float),
                    residual=np.asarray(residual, dtype=float),
                    period=None,
                    seasonal_variance=0.0,
                    is_seasonal=False,
                )
            )
        return DecompositionResult(variables=tuple(out))

    def test_perfect_correlation(self):
        rng = np.random.default_rng(7)
        shared = rng.standard_normal(200)
        dec = self._manual_decomposition(
            [
                (shared, rng.standard_normal(200), rng.standard_normal(200)),
                (rng.standard_normal(200), rng.standard_normal(200), shared),
            ]
        )
        report = leakage(dec)
        assert report.lambda_hat == pytest.approx(1.0)
        assert report.argmax_pair == ("trend", 0, "residual", 1)

    def test_independent_components_small_lambda(self):
        rng = np.random.default_rng(8)
        n = 2000
        dec = self._manual_decomposition(
            [
                (rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n)),
                (rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n)),
            ]
        )
        report = leakage(dec)
        assert report.lambda_hat < 4.0 / np.sqrt(n)

    def test_zero_variance_components_skipped(self):
        rng = np.random.default_rng(9)
        n = 100
        dec = self._manual_decomposition(
            [(np.zeros(n), np.zeros(n), rng.standard_normal(n))]
        )
        report = leakage(dec)
        assert np.isnan(report.matrix).all(axis=1)[0]

    def test_all_degenerate(self):
        dec = self._manual_decomposition([(np.zeros(50), np.zeros(50), np.zeros(50))])
        with pytest.raises(AllComponentsDegenerateError):
            leakage(dec)

    def test_matrix_entries_in_unit_interval(self):
        matrix, _ = generate(SynthSpec(n=500, d=3, lag=2, seed=11))
        report = leakage(decompose_all(matrix))
        finite = report.matrix[np.isfinite(report.matrix)]
        assert ((finite >= 0) & (finite <= 1)).all()
        assert report.lambda_hat == np.nanmax(report.matrix)


class TestNonSeasonalTrend:
    def test_ar_with_trend_gets_loess_trend(self):
        rng = np.random.default_rng(10)
        t = np.arange(1000, dtype=float)
        x = 8.0 + 0.1 * t + ar1(rng, 1000, phi=0.6)
        matrix = TimeSeriesMatrix(values=x[:, None], var_names=("x",))
        dec = decompose_all(matrix)
        var = dec[0]
        assert not var.is_seasonal
        assert np.abs(var.seasonal).max() == 0.0
        # trend tracks the ramp closely
        slope = np.polyfit(t, var.trend, 1)[0]
        assert slope == pytest.approx(0.1, rel=0.05)
