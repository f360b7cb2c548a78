"""Seasonal-trend decomposition with period selection and leakage diagnostics.

Each variable is split additively into trend + seasonal + residual via STL.
The seasonal period is chosen by a variance-maximization search over trial
decompositions; variables whose best candidate explains less than ``tau`` of
the detrended variance are treated as aperiodic (seasonal identically zero,
trend from a plain LOESS fit). A leakage report summarizes the largest
cross-component correlation left behind by the decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from statsmodels.nonparametric.smoothers_lowess import lowess
from statsmodels.tsa.seasonal import STL

from .errors import (
    AllComponentsDegenerateError,
    PeriodTooLargeError,
    SeriesTooShortError,
)
from .timeseries import TimeSeriesMatrix, standardize_series

#: Smallest-period preference: candidates within this relative distance of
#: the best score are treated as equivalent and the smallest period wins.
FUNDAMENTAL_WINDOW = 0.05

DEFAULT_TAU = 0.1
DEFAULT_MIN_PERIOD = 4
DEFAULT_MAX_PERIOD = 64

#: Floor for the detrended-variance denominator of the seasonal score, on the
#: standardized scale; keeps near-deterministic series from scoring spuriously.
_DETRENDED_VAR_FLOOR = 1e-6


@dataclass(frozen=True)
class StlParams:
    """Smoothing configuration; defaults follow Cleveland's published values."""

    seasonal_window: int = 7
    inner_iter: int = 2
    robust: bool = False

    @property
    def outer_iter(self) -> int:
        return 5 if self.robust else 0


def trend_window(period: int, seasonal_window: int = 7) -> int:
    """Smallest odd integer >= 1.5 * period / (1 - 1.5 / seasonal_window)."""
    w = int(np.ceil(1.5 * period / (1.0 - 1.5 / seasonal_window)))
    return w if w % 2 == 1 else w + 1


def lowpass_window(period: int) -> int:
    """Smallest odd integer strictly greater than the period."""
    return period + 1 if period % 2 == 0 else period + 2


def default_period_candidates(
    n: int, min_period: int = DEFAULT_MIN_PERIOD, max_period: int = DEFAULT_MAX_PERIOD
) -> range:
    """All integer periods in [min_period, min(n // 3, max_period)]."""
    return range(min_period, min(n // 3, max_period) + 1)


def stl(
    x: np.ndarray, period: int, params: StlParams = StlParams()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decompose one series into (trend, seasonal, residual) at a fixed period.

    The additive identity trend + seasonal + residual == x holds exactly.
    After the de-meaning step the seasonal averages to ~0 over every full
    cycle window (the window means are shifted into the trend).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if period < 2:
        raise PeriodTooLargeError(f"period must be >= 2, got {period}")
    if n < 6:
        raise SeriesTooShortError(f"need at least 6 observations, got {n}")
    if n < 3 * period:
        raise PeriodTooLargeError(f"period {period} needs n >= {3 * period}, got {n}")

    fit = STL(
        x,
        period=period,
        seasonal=params.seasonal_window,
        trend=trend_window(period, params.seasonal_window),
        low_pass=lowpass_window(period),
        robust=params.robust,
    ).fit(inner_iter=params.inner_iter, outer_iter=params.outer_iter)
    trend = np.asarray(fit.trend, dtype=np.float64).copy()
    seasonal = np.asarray(fit.seasonal, dtype=np.float64).copy()

    # de-meaning step: move per-window seasonal means into the trend
    for start in range(0, n, period):
        stop = min(start + period, n)
        m = seasonal[start:stop].mean()
        seasonal[start:stop] -= m
        trend[start:stop] += m

    residual = x - trend - seasonal
    return trend, seasonal, residual


def loess_trend(x: np.ndarray, span: int) -> np.ndarray:
    """LOESS trend for aperiodic variables; span is a window in observations."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    frac = min(1.0, max(span, 3) / n)
    t = np.arange(n, dtype=np.float64)
    return np.asarray(lowess(x, t, frac=frac, it=0, return_sorted=False), dtype=np.float64)


def seasonal_strength(x_std: np.ndarray, period: int, trend: np.ndarray) -> float:
    """Share of detrended variance explained by the stable periodic pattern.

    One-way ANOVA over the phase groups of the detrended series: the
    between-phase variance minus its sampling bias under pure noise
    (MSW * period / n), relative to the detrended variance. Unit-free and
    insensitive to trend magnitude; ~0 in expectation for aperiodic input.
    """
    d = np.asarray(x_std, dtype=np.float64) - trend
    n = d.size
    phases = np.arange(n) % period
    means = np.zeros(period)
    counts = np.zeros(period)
    ssw = 0.0
    for ph in range(period):
        grp = d[phases == ph]
        counts[ph] = grp.size
        means[ph] = grp.mean()
        ssw += float(((grp - means[ph]) ** 2).sum())
    msw = ssw / (n - period)
    grand = float((counts * means).sum() / n)
    between = float((counts * (means - grand) ** 2).sum() / n)
    pattern_var = max(0.0, between - msw * period / n)
    denom = max(float(d.var(ddof=1)), _DETRENDED_VAR_FLOOR)
    return pattern_var / denom


def select_period(
    x: np.ndarray,
    candidates=None,
    tau: float = DEFAULT_TAU,
    params: StlParams = StlParams(),
) -> tuple[int | None, float]:
    """Pick the candidate period with the largest seasonal-variance score.

    The series is standardized first so tau is unit-free. Candidates with
    n < 3 * period are silently skipped. Among candidates within
    FUNDAMENTAL_WINDOW of the maximum score the smallest period wins, which
    prefers the fundamental over its multiples. Returns (None, best_score)
    when no candidate reaches tau.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if candidates is None:
        candidates = default_period_candidates(n)
    xs = standardize_series(x)

    scores: dict[int, float] = {}
    for period in sorted(set(int(p) for p in candidates)):
        if period < 2 or n < 3 * period:
            continue
        trend, _, _ = stl(xs, period, params)
        scores[period] = seasonal_strength(xs, period, trend)
    if not scores:
        return None, 0.0

    best = max(scores.values())
    if best <= 0.0:
        return None, 0.0
    near = [p for p in sorted(scores) if scores[p] >= (1.0 - FUNDAMENTAL_WINDOW) * best]
    p_star = min(near)
    score = scores[p_star]
    if score < tau:
        return None, score
    return p_star, score


@dataclass(frozen=True)
class VariableDecomposition:
    name: str
    trend: np.ndarray = field(repr=False)
    seasonal: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)
    period: int | None
    seasonal_variance: float
    is_seasonal: bool


@dataclass(frozen=True)
class DecompositionResult:
    """Per-variable components; variable order matches the input matrix."""

    variables: tuple[VariableDecomposition, ...]

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def d(self) -> int:
        return len(self.variables)

    @property
    def n(self) -> int:
        return self.variables[0].trend.size

    def residual_matrix(self) -> np.ndarray:
        return np.column_stack([v.residual for v in self.variables])

    def __getitem__(self, i: int) -> VariableDecomposition:
        return self.variables[i]


def decompose_all(
    x: TimeSeriesMatrix,
    candidates=None,
    tau: float = DEFAULT_TAU,
    params: StlParams = StlParams(),
) -> DecompositionResult:
    """Decompose every variable of the matrix.

    Seasonal variables get a full STL fit at their selected period;
    aperiodic variables get seasonal == 0 and a LOESS trend with the span a
    period-12 STL would use, so trend tests apply uniformly.
    """
    out = []
    for i, name in enumerate(x.var_names):
        series = x.values[:, i]
        try:
            period, score = select_period(series, candidates, tau, params)
            if period is not None:
                trend, seasonal, residual = stl(series, period, params)
            else:
                trend = loess_trend(series, trend_window(12, params.seasonal_window))
                seasonal = np.zeros_like(series)
                residual = series - trend
        except (SeriesTooShortError, PeriodTooLargeError) as exc:
            raise type(exc)(f"variable {name!r}: {exc}") from exc
        out.append(
            VariableDecomposition(
                name=name,
                trend=trend,
                seasonal=seasonal,
                residual=residual,
                period=period,
                seasonal_variance=score,
                is_seasonal=period is not None,
            )
        )
    return DecompositionResult(variables=tuple(out))


@dataclass(frozen=True)
class LeakageReport:
    """Largest absolute cross-component correlation and the full matrix.

    Rows are trend_0..trend_{d-1} then seasonal_0..seasonal_{d-1}; columns
    are residual_0..residual_{d-1}. Entries for skipped (zero variance)
    components are NaN and excluded from the maximum.
    """

    lambda_hat: float
    argmax_pair: tuple[str, int, str, int]
    matrix: np.ndarray = field(repr=False)
    row_labels: tuple[str, ...] = field(repr=False)
    col_labels: tuple[str, ...] = field(repr=False)


def _abs_corr(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa < 1e-12 or sb < 1e-12:
        return np.nan
    r = float(np.corrcoef(a, b)[0, 1])
    return min(abs(r), 1.0)


def leakage(dec: DecompositionResult) -> LeakageReport:
    """Maximum absolute correlation between trend/seasonal and residuals."""
    d = dec.d
    kinds = [("trend", lambda v: v.trend), ("seasonal", lambda v: v.seasonal)]
    matrix = np.full((2 * d, d), np.nan)
    row_labels = []
    for k, (kind, getter) in enumerate(kinds):
        for i, var in enumerate(dec.variables):
            row_labels.append(f"{kind}:{var.name}")
            for j, other in enumerate(dec.variables):
                matrix[k * d + i, j] = _abs_corr(getter(var), other.residual)
    col_labels = tuple(f"residual:{v.name}" for v in dec.variables)

    if np.all(np.isnan(matrix)):
        raise AllComponentsDegenerateError("no component pair has positive variance")
    flat = np.nanargmax(matrix)
    ri, cj = np.unravel_index(flat, matrix.shape)
    kind = "trend" if ri < d else "seasonal"
    return LeakageReport(
        lambda_hat=float(matrix[ri, cj]),
        argmax_pair=(kind, int(ri % d), "residual", int(cj)),
        matrix=matrix,
        row_labels=tuple(row_labels),
        col_labels=col_labels,
    )
