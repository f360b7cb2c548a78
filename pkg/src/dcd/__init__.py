"""Decomposition-based causal discovery for multivariate time series."""

from .decompose import (
    DecompositionResult,
    LeakageReport,
    StlParams,
    decompose_all,
    default_period_candidates,
    leakage,
    select_period,
    stl,
)
from .dependence import HsicResult, hsic_perm_test, hsic_statistic, median_bandwidth
from .errors import DcdError
from .estimator import DCDiscovery, STLDecomposer, as_matrix
from .graph import (
    TIME,
    CausalGraph,
    Edge,
    MatchingConvention,
    MetricsReport,
    evaluate,
    from_json,
    integrate,
    to_dot,
    to_json,
)
from .pipeline import RunConfig, bench, discover, verify_projection
from .residual import (
    LaggedEdge,
    ResidualGraph,
    build_lagged_design,
    discover_contemporaneous,
    discover_lagged,
    partial_corr_test,
    residual_discovery,
)
from .stationarity import (
    AdfResult,
    KpssResult,
    StationarityVerdict,
    adf_test,
    classify_trend,
    kpss_test,
)
from .synth import (
    GroundTruth,
    SynthSpec,
    benchmark_suite,
    generate,
    generate_projection_system,
)
from .timeseries import (
    IngestOptions,
    TimeSeriesMatrix,
    load_csv,
    save_csv,
    standardize,
    unstandardize,
)

__version__ = "0.1.0"

__all__ = [
    "AdfResult",
    "CausalGraph",
    "DCDiscovery",
    "DcdError",
    "DecompositionResult",
    "Edge",
    "GroundTruth",
    "HsicResult",
    "IngestOptions",
    "KpssResult",
    "LaggedEdge",
    "LeakageReport",
    "MatchingConvention",
    "MetricsReport",
    "ResidualGraph",
    "RunConfig",
    "STLDecomposer",
    "StationarityVerdict",
    "StlParams",
    "SynthSpec",
    "TIME",
    "TimeSeriesMatrix",
    "adf_test",
    "as_matrix",
    "bench",
    "benchmark_suite",
    "build_lagged_design",
    "classify_trend",
    "decompose_all",
    "default_period_candidates",
    "discover",
    "discover_contemporaneous",
    "discover_lagged",
    "evaluate",
    "from_json",
    "generate",
    "generate_projection_system",
    "hsic_perm_test",
    "hsic_statistic",
    "integrate",
    "kpss_test",
    "leakage",
    "load_csv",
    "median_bandwidth",
    "partial_corr_test",
    "residual_discovery",
    "save_csv",
    "select_period",
    "standardize",
    "stl",
    "to_dot",
    "to_json",
    "unstandardize",
    "verify_projection",
]
