"""Unit-root and stationarity tests for trend components.

A trend is classified non-stationary when the ADF test fails to reject a unit
root or the KPSS test rejects stationarity, each at the same level. ADF is
delegated to statsmodels (MacKinnon response-surface p-values) with the
Schwert lag rule; KPSS is implemented here with a Bartlett/Newey-West
long-run variance and the published critical-value table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from statsmodels.tsa.stattools import adfuller

from .errors import ConstantSeriesError, SeriesTooShortError, SingularDesignError

MIN_OBS = 20

#: KPSS critical values (ascending) with their upper-tail probabilities.
KPSS_CRITICAL_VALUES = {
    "c": ((0.347, 0.10), (0.463, 0.05), (0.574, 0.025), (0.739, 0.01)),
    "ct": ((0.119, 0.10), (0.146, 0.05), (0.176, 0.025), (0.216, 0.01)),
}


def schwert_lag(n: int) -> int:
    """Schwert's rule for the ADF lag order: floor(12 * (n/100)^(1/4))."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def bartlett_bandwidth(n: int) -> int:
    """Newey-West bandwidth for KPSS: floor(4 * (n/100)^(1/4))."""
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def _check_series(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("series must be 1-D")
    if y.size < MIN_OBS:
        raise SeriesTooShortError(f"need at least {MIN_OBS} observations, got {y.size}")
    if np.ptp(y) == 0.0:
        raise ConstantSeriesError("series is constant")
    return y


@dataclass(frozen=True)
class AdfResult:
    stat: float
    p_value: float
    used_lag: int


@dataclass(frozen=True)
class KpssResult:
    stat: float
    p_value: float
    used_bandwidth: int
    clipped: bool


def adf_test(y: np.ndarray, regression: str = "c", max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test; lower statistics reject the unit root.

    max_lag=None applies the Schwert rule, capped so the regression keeps
    positive degrees of freedom.
    """
    y = _check_series(y)
    if regression not in ("c", "ct"):
        raise ValueError("regression must be 'c' or 'ct'")
    n = y.size
    lag = schwert_lag(n) if max_lag is None else int(max_lag)
    n_trend = 1 if regression == "c" else 2
    # keep rows > params + 1 in the ADF regression on n-1-lag differences
    lag = max(0, min(lag, (n - n_trend - 4) // 2))
    try:
        stat, p_value = adfuller(y, maxlag=lag, regression=regression, autolag=None)[:2]
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(f"collinear ADF design: {exc}") from exc
    if not np.isfinite(stat):
        raise SingularDesignError("ADF regression produced a non-finite statistic")
    return AdfResult(stat=float(stat), p_value=float(p_value), used_lag=lag)


def kpss_pvalue(stat: float, regression: str = "c") -> tuple[float, bool]:
    """Interpolate the KPSS p-value from the published table.

    Off-table statistics clip to the 0.10/0.01 endpoints; the second return
    value flags that clipping.
    """
    table = KPSS_CRITICAL_VALUES[regression]
    crit = np.array([c for c, _ in table])
    pvals = np.array([p for _, p in table])
    clipped = stat < crit[0] or stat > crit[-1]
    p = float(np.interp(stat, crit, pvals))
    return p, bool(clipped)


def kpss_test(y: np.ndarray, regression: str = "c", bandwidth: int | None = None) -> KpssResult:
    """KPSS stationarity test; large statistics reject stationarity.

    The statistic is sum(S_t^2) / (n^2 * s2_lr) with S_t the partial sums of
    OLS residuals from regressing y on a constant (or constant + trend) and
    s2_lr the Bartlett-kernel long-run variance. bandwidth=None applies
    floor(4 * (n/100)^(1/4)).
    """
    y = _check_series(y)
    if regression not in ("c", "ct"):
        raise ValueError("regression must be 'c' or 'ct'")
    n = y.size
    bw = bartlett_bandwidth(n) if bandwidth is None else int(bandwidth)
    bw = max(0, min(bw, n - 1))

    if regression == "c":
        resid = y - y.mean()
    else:
        design = np.column_stack([np.ones(n), np.arange(n, dtype=np.float64)])
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta

    s2 = float(resid @ resid) / n
    for i in range(1, bw + 1):
        weight = 1.0 - i / (bw + 1.0)
        s2 += 2.0 / n * weight * float(resid[:-i] @ resid[i:])
    if s2 <= 0.0:
        raise SingularDesignError("non-positive long-run variance estimate")

    partial = np.cumsum(resid)
    stat = float(partial @ partial) / (n * n * s2)
    p, clipped = kpss_pvalue(stat, regression)
    return KpssResult(stat=stat, p_value=p, used_bandwidth=bw, clipped=clipped)


@dataclass(frozen=True)
class StationarityVerdict:
    """Joint ADF + KPSS classification of one trend component.

    nonstationary is (adf_p >= alpha) or (kpss_p < alpha). Constant trends
    short-circuit both tests and are stationary by convention (a flat trend
    induces no time edge); the stats are then NaN and constant is True.
    """

    adf_stat: float
    adf_p: float
    kpss_stat: float
    kpss_p: float
    nonstationary: bool
    regression_kind: str
    adf_lag: int
    kpss_bandwidth: int
    kpss_clipped: bool
    constant: bool = False


def classify_trend(
    trend: np.ndarray,
    alpha: float = 0.05,
    regression: str = "c",
    smooth_span: int | None = None,
) -> StationarityVerdict:
    """Classify a trend component as non-stationary or not.

    regression defaults to 'c': with 'ct' both tests are invariant to adding
    a linear function of t, so deterministic ramps would never be flagged.
    smooth_span, when given, is the window the trend was smoothed with; the
    KPSS bandwidth is raised to at least that span so the smoothing-induced
    autocorrelation does not masquerade as non-stationarity.
    """
    trend = np.asarray(trend, dtype=np.float64)
    if trend.size >= 1 and np.ptp(trend) < 1e-12:
        return StationarityVerdict(
            adf_stat=np.nan,
            adf_p=0.0,
            kpss_stat=np.nan,
            kpss_p=KPSS_CRITICAL_VALUES[regression][0][1],
            nonstationary=False,
            regression_kind=regression,
            adf_lag=0,
            kpss_bandwidth=0,
            kpss_clipped=False,
            constant=True,
        )
    bw = max(bartlett_bandwidth(trend.size), smooth_span or 0)
    adf = adf_test(trend, regression=regression)
    kpss = kpss_test(trend, regression=regression, bandwidth=bw)
    return StationarityVerdict(
        adf_stat=adf.stat,
        adf_p=adf.p_value,
        kpss_stat=kpss.stat,
        kpss_p=kpss.p_value,
        nonstationary=(adf.p_value >= alpha) or (kpss.p_value < alpha),
        regression_kind=regression,
        adf_lag=adf.used_lag,
        kpss_bandwidth=kpss.used_bandwidth,
        kpss_clipped=kpss.clipped,
    )
