"""Scikit-learn style wrappers so the pipeline composes with that ecosystem.

DCDiscovery is the fit-shaped front door: ``fit(X)`` runs decomposition,
component tests and residual discovery, leaving the integrated graph on
``graph_``. STLDecomposer is a transformer whose ``transform`` returns the
residual matrix (trend and seasonality removed), usable as a preprocessing
step.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .decompose import StlParams, decompose_all, loess_trend, stl, select_period, trend_window
from .pipeline import RunConfig, discover
from .timeseries import TimeSeriesMatrix


def as_matrix(X, var_names=None) -> TimeSeriesMatrix:
    """Validate array-like input into a TimeSeriesMatrix."""
    if isinstance(X, TimeSeriesMatrix):
        return X
    values = check_array(X, ensure_2d=True, dtype=np.float64, ensure_all_finite=True)
    if var_names is None:
        var_names = tuple(f"x{i}" for i in range(values.shape[1]))
    return TimeSeriesMatrix(values=values, var_names=tuple(var_names))


class DCDiscovery(BaseEstimator):
    """Decomposition-based causal discovery as a fit-shaped estimator.

    Parameters mirror RunConfig. After ``fit``, ``graph_`` holds the
    integrated multi-scale graph, ``manifest_`` the full run manifest and
    ``decomposition_`` the per-variable components.
    """

    def __init__(
        self,
        tau: float = 0.1,
        alpha: float = 0.05,
        pc_alpha: float = 0.2,
        max_lag: int = 2,
        hsic_perms: int = 500,
        min_period: int = 4,
        max_period: int = 64,
        seed: int = 0,
        robust_stl: bool = False,
        max_cond_size: int = 3,
        trend_regression: str = "c",
    ):
        self.tau = tau
        self.alpha = alpha
        self.pc_alpha = pc_alpha
        self.max_lag = max_lag
        self.hsic_perms = hsic_perms
        self.min_period = min_period
        self.max_period = max_period
        self.seed = seed
        self.robust_stl = robust_stl
        self.max_cond_size = max_cond_size
        self.trend_regression = trend_regression

    def _config(self) -> RunConfig:
        return RunConfig(
            tau=self.tau,
            alpha=self.alpha,
            pc_alpha=self.pc_alpha,
            max_lag=self.max_lag,
            hsic_perms=self.hsic_perms,
            min_period=self.min_period,
            max_period=self.max_period,
            seed=self.seed,
            robust_stl=self.robust_stl,
            max_cond_size=self.max_cond_size,
            trend_regression=self.trend_regression,
        )

    def fit(self, X, y=None, var_names=None):
        matrix = as_matrix(X, var_names)
        result = discover(matrix, self._config())
        self.graph_ = result.graph
        self.manifest_ = result.manifest
        self.decomposition_ = result.decomposition
        self.trend_verdicts_ = result.trend_verdicts
        self.hsic_results_ = result.hsic_results
        self.residual_graph_ = result.residual_graph
        self.n_features_in_ = matrix.d
        return self

    def _check_fitted(self):
        if not hasattr(self, "graph_"):
            raise NotFittedError("call fit before using this estimator")

    def edges(self):
        self._check_fitted()
        return self.graph_.edges


class STLDecomposer(BaseEstimator, TransformerMixin):
    """Per-column STL with period selection; transform returns residuals."""

    def __init__(
        self,
        tau: float = 0.1,
        min_period: int = 4,
        max_period: int = 64,
        robust: bool = False,
    ):
        self.tau = tau
        self.min_period = min_period
        self.max_period = max_period
        self.robust = robust

    def fit(self, X, y=None):
        values = check_array(X, ensure_2d=True, dtype=np.float64)
        params = StlParams(robust=self.robust)
        periods = []
        scores = []
        for j in range(values.shape[1]):
            period, score = select_period(
                values[:, j], range(self.min_period, self.max_period + 1), self.tau, params
            )
            periods.append(period)
            scores.append(score)
        self.periods_ = tuple(periods)
        self.seasonal_variances_ = tuple(scores)
        self.n_features_in_ = values.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "periods_"):
            raise NotFittedError("call fit before transform")
        values = check_array(X, ensure_2d=True, dtype=np.float64)
        if values.shape[1] != self.n_features_in_:
            raise ValueError("column count changed between fit and transform")
        params = StlParams(robust=self.robust)
        out = np.empty_like(values)
        for j, period in enumerate(self.periods_):
            if period is None:
                trend = loess_trend(values[:, j], trend_window(12))
                out[:, j] = values[:, j] - trend
            else:
                _, _, residual = stl(values[:, j], period, params)
                out[:, j] = residual
        return out
