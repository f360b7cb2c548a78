"""End-to-end orchestration: decompose, test components, discover, integrate.

A run produces the integrated graph plus a manifest holding every parameter
and decision default that influenced it, so identical (input, config, seed)
yields byte-identical artifacts. The benchmark harness runs the generator
grid, evaluates against ground truth with and without TIME edges, and emits
long-format plus aggregated CSV reports.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import decompose as dec_mod
from .decompose import StlParams, decompose_all, leakage, trend_window
from .dependence import HsicResult, hsic_perm_test
from .errors import ConfigError, DcdError, PipelineError
from .graph import CausalGraph, MatchingConvention, evaluate, integrate
from .residual import contemporaneous_is_acyclic, partial_corr_test, residual_discovery
from .stationarity import StationarityVerdict, classify_trend
from .synth import SynthSpec, cell_seed, generate, generate_projection_system
from .timeseries import TimeSeriesMatrix

MANIFEST_SCHEMA = "dcd-manifest/1"

#: Keys a complete run manifest must contain (decision defaults included).
REQUIRED_MANIFEST_KEYS = (
    "schema",
    "config",
    "defaults",
    "variables",
    "n_observations",
)


@dataclass(frozen=True)
class RunConfig:
    """Pipeline configuration; serialized verbatim into the run manifest."""

    tau: float = 0.1
    alpha: float = 0.05
    pc_alpha: float = 0.2
    max_lag: int = 2
    hsic_perms: int = 500
    min_period: int = 4
    max_period: int = 64
    seed: int = 0
    robust_stl: bool = False
    max_cond_size: int = 3
    trend_regression: str = "c"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.pc_alpha < 1.0:
            raise ConfigError(f"pc_alpha must be in (0, 1), got {self.pc_alpha}")
        if self.tau < 0.0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")
        if self.max_lag < 1:
            raise ConfigError(f"max_lag must be >= 1, got {self.max_lag}")
        if self.hsic_perms < 1:
            raise ConfigError(f"hsic_perms must be >= 1, got {self.hsic_perms}")
        if not 2 <= self.min_period <= self.max_period:
            raise ConfigError(
                f"need 2 <= min_period <= max_period, got {self.min_period}..{self.max_period}"
            )
        if self.trend_regression not in ("c", "ct"):
            raise ConfigError(f"trend_regression must be 'c' or 'ct'")

    @property
    def stl_params(self) -> StlParams:
        return StlParams(robust=self.robust_stl)


@dataclass(frozen=True)
class DiscoveryResult:
    graph: CausalGraph
    manifest: dict
    decomposition: object = field(repr=False)
    trend_verdicts: tuple[StationarityVerdict, ...] = field(repr=False)
    hsic_results: tuple[HsicResult | None, ...] = field(repr=False)
    residual_graph: object = field(repr=False)


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DcdError as exc:
        raise PipelineError(name, exc) from exc


def worker_count() -> int:
    """Worker-pool size, capped by the DCD_THREADS environment variable."""
    cap = os.environ.get("DCD_THREADS")
    count = os.cpu_count() or 1
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"DCD_THREADS must be an integer, got {cap!r}") from None
    return count


def _hsic_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence((master, index)).generate_state(1)[0])


def discover(x: TimeSeriesMatrix, cfg: RunConfig = RunConfig()) -> DiscoveryResult:
    """Run the full pipeline on one matrix and return graph + manifest."""
    candidates = range(cfg.min_period, cfg.max_period + 1)
    decomposition = _stage(
        "decompose", decompose_all, x, candidates, cfg.tau, cfg.stl_params
    )

    verdicts = []
    for var in decomposition.variables:
        span = trend_window(var.period if var.period is not None else 12)
        verdicts.append(
            _stage(
                "trend-test",
                classify_trend,
                var.trend,
                cfg.alpha,
                cfg.trend_regression,
                span,
            )
        )

    hsic_results: list[HsicResult | None] = []
    for i, var in enumerate(decomposition.variables):
        if var.is_seasonal:
            hsic_results.append(
                _stage(
                    "seasonal-test",
                    hsic_perm_test,
                    var.seasonal,
                    None,
                    cfg.hsic_perms,
                    cfg.alpha,
                    _hsic_seed(cfg.seed, i),
                )
            )
        else:
            hsic_results.append(None)

    residual_graph = _stage(
        "residual-discovery",
        residual_discovery,
        decomposition.residual_matrix(),
        cfg.max_lag,
        cfg.alpha,
        cfg.pc_alpha,
        cfg.max_cond_size,
    )
    if not contemporaneous_is_acyclic(residual_graph):
        raise PipelineError("residual-discovery", DcdError("oriented lag-0 subgraph is cyclic"))

    trend_vars = [i for i, v in enumerate(verdicts) if v.nonstationary]
    seasonal_vars = [
        i for i, h in enumerate(hsic_results) if h is not None and h.significant
    ]
    graph = _stage(
        "integrate",
        integrate,
        residual_graph,
        trend_vars,
        seasonal_vars,
        x.var_names,
        {i: (verdicts[i].adf_stat, verdicts[i].adf_p) for i in trend_vars},
        {i: (hsic_results[i].statistic, hsic_results[i].p_value) for i in seasonal_vars},
    )

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": asdict(cfg),
        "defaults": {
            "stl": {
                "seasonal_window": cfg.stl_params.seasonal_window,
                "inner_iter": cfg.stl_params.inner_iter,
                "outer_iter": cfg.stl_params.outer_iter,
                "trend_window_rule": "smallest odd >= 1.5p/(1-1.5/seasonal_window)",
                "lowpass_window_rule": "smallest odd > p",
                "seasonal_demeaning": "per-cycle means shifted into trend",
            },
            "period_selection": {
                "candidates": [cfg.min_period, cfg.max_period],
                "score": "bias-corrected between-phase variance share of detrended series",
                "fundamental_window": dec_mod.FUNDAMENTAL_WINDOW,
                "tau_scale": "standardized, detrended",
            },
            "stationarity": {
                "adf_lag_rule": "schwert floor(12*(n/100)^0.25)",
                "kpss_bandwidth_rule": "max(bartlett floor(4*(n/100)^0.25), trend smoothing span)",
                "regression": cfg.trend_regression,
                "decision": "nonstationary iff adf_p >= alpha or kpss_p < alpha",
                "constant_series": "stationary by convention",
            },
            "hsic": {
                "bandwidth": "median pairwise distance, mean fallback",
                "time_index": "0..n-1 scaled to [0,1]",
                "p_value": "(1 + exceed) / (1 + permutations)",
            },
            "residual_cd": {
                "standardization": "residual columns re-standardized (ddof=1)",
                "procedure": "two-phase lagged (condition selection + confirmation), tiered PC at lag 0",
                "tie_break": "|rho| desc, then (var, lag) lexicographic",
                "sepset_rule": "max-p subset per level",
                "ridge_fallback": 1e-8,
                "self_lags": "discovered, excluded from cross-variable metrics",
            },
            "std_ddof": 1,
        },
        "variables": [
            {
                "name": var.name,
                "period": var.period,
                "seasonal_variance": var.seasonal_variance,
                "is_seasonal": var.is_seasonal,
                "trend_nonstationary": verdicts[i].nonstationary,
                "adf_stat": _none_if_nan(verdicts[i].adf_stat),
                "adf_p": _none_if_nan(verdicts[i].adf_p),
                "kpss_stat": _none_if_nan(verdicts[i].kpss_stat),
                "kpss_p": _none_if_nan(verdicts[i].kpss_p),
                "kpss_clipped": verdicts[i].kpss_clipped,
                "hsic_stat": hsic_results[i].statistic if hsic_results[i] else None,
                "hsic_p": hsic_results[i].p_value if hsic_results[i] else None,
            }
            for i, var in enumerate(decomposition.variables)
        ],
        "n_observations": x.n,
        "residual_graph": {
            "tau_max": residual_graph.tau_max,
            "n_edges": len(residual_graph.edges),
            "n_confirmation_tests": residual_graph.n_confirmation_tests,
        },
    }
    validate_manifest(manifest)
    return DiscoveryResult(
        graph=graph,
        manifest=manifest,
        decomposition=decomposition,
        trend_verdicts=tuple(verdicts),
        hsic_results=tuple(hsic_results),
        residual_graph=residual_graph,
    )


def _none_if_nan(value: float):
    return None if value != value else float(value)


def validate_manifest(manifest: dict) -> None:
    """Assert the manifest carries every decision default of the run."""
    missing = [k for k in REQUIRED_MANIFEST_KEYS if k not in manifest]
    if missing:
        raise ConfigError(f"manifest missing keys: {missing}")
    for section in ("stl", "period_selection", "stationarity", "hsic", "residual_cd"):
        if section not in manifest["defaults"]:
            raise ConfigError(f"manifest defaults missing section {section!r}")


def verify_projection(
    seeds: int = 20,
    n: int = 1000,
    period: int = 12,
    cfg: RunConfig = RunConfig(),
    **system_kwargs,
) -> dict:
    """Leakage verification on the bivariate seasonal-driver system.

    For each seed: generate, decompose both observables, record the
    correlation between the estimated seasonal of X and the estimated
    residual of Y, and test the lag-1 residual link directly. Passes when
    the mean absolute leakage correlation is below 0.05.
    """
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    rhos = []
    link_ps = []
    lambda_hats = []
    for k in range(seeds):
        seed = cell_seed(cfg.seed, n, 2, 2, k)
        matrix, _ = generate_projection_system(n=n, period=period, seed=seed, **system_kwargs)
        decomposition = decompose_all(
            matrix, range(cfg.min_period, cfg.max_period + 1), cfg.tau, cfg.stl_params
        )
        s_x = decomposition[0].seasonal
        r_y = decomposition[1].residual
        if s_x.std() < 1e-12 or r_y.std() < 1e-12:
            rho = 0.0
        else:
            rho = float(np.corrcoef(s_x, r_y)[0, 1])
        rhos.append(abs(rho))
        lambda_hats.append(leakage(decomposition).lambda_hat)

        r_x = decomposition[0].residual
        _, p_link = partial_corr_test(r_x[:-1], r_y[1:])
        link_ps.append(p_link)

    mean_abs = float(np.mean(rhos))
    return {
        "seeds": seeds,
        "n": n,
        "period": period,
        "mean_abs_corr": mean_abs,
        "per_seed_abs_corr": rhos,
        "per_seed_lambda_hat": lambda_hats,
        "lag1_link_p_values": link_ps,
        "lag1_detection_rate": float(np.mean([p < 0.01 for p in link_ps])),
        "pass": mean_abs < 0.05,
    }


def _bench_job(args):
    n, d, lag, k, master_seed, density, base_cfg = args
    spec = SynthSpec(n=n, d=d, lag=lag, seed=cell_seed(master_seed, n, d, lag, k), density=density)
    matrix, truth = generate(spec)
    cfg = RunConfig(**{**asdict(base_cfg), "max_lag": lag, "seed": spec.seed})
    result = discover(matrix, cfg)
    truth_graph = truth.to_causal_graph(matrix.var_names)
    pred = result.graph
    full = evaluate(pred, truth_graph, MatchingConvention(include_time_edges=True))
    resid = evaluate(pred, truth_graph, MatchingConvention(include_time_edges=False))
    return {
        "n": n,
        "d": d,
        "lag": lag,
        "seed_index": k,
        "metrics": {
            "tpr": full.tpr,
            "fdr": full.fdr,
            "shd": full.shd,
            "tpr_residual_only": resid.tpr,
            "fdr_residual_only": resid.fdr,
            "shd_residual_only": resid.shd,
        },
    }


def bench(
    out_dir: str | Path,
    ns=(500, 1000),
    ds=(4, 6),
    lags=(2,),
    seeds: int = 10,
    master_seed: int = 0,
    density: float = 0.5,
    cfg: RunConfig = RunConfig(),
) -> dict:
    """Run synth -> discover -> evaluate over the grid; emit CSV reports.

    Per-cell failures are recorded and the run continues; the report's
    "failures" list is the caller's cue for a nonzero exit.
    """
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [
        (n, d, lag, k, master_seed, density, cfg)
        for n in ns for d in ds for lag in lags for k in range(seeds)
    ]
    rows = []
    failures = []

    def run_one(job):
        try:
            return _bench_job(job)
        except Exception as exc:  # keep the grid going, report at the end
            return {"job": job[:4], "error": f"{type(exc).__name__}: {exc}"}

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for outcome in pool.map(run_one, jobs):
            if "error" in outcome:
                failures.append(outcome)
            else:
                rows.append(outcome)
    rows.sort(key=lambda r: (r["n"], r["d"], r["lag"], r["seed_index"]))

    long_path = out_dir / "bench_long.csv"
    with long_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "d", "lag", "seed_index", "metric", "value"])
        for row in rows:
            for metric, value in sorted(row["metrics"].items()):
                writer.writerow(
                    [row["n"], row["d"], row["lag"], row["seed_index"], metric, f"{value:.17g}"]
                )

    cells: dict[tuple, dict[str, list[float]]] = {}
    for row in rows:
        cell = (row["n"], row["d"], row["lag"])
        bucket = cells.setdefault(cell, {})
        for metric, value in row["metrics"].items():
            bucket.setdefault(metric, []).append(value)

    aggregate = []
    for cell in sorted(cells):
        entry = {"n": cell[0], "d": cell[1], "lag": cell[2], "seeds": len(next(iter(cells[cell].values())))}
        for metric, values in sorted(cells[cell].items()):
            entry[f"{metric}_mean"] = statistics.fmean(values)
            entry[f"{metric}_std"] = statistics.pstdev(values) if len(values) > 1 else 0.0
        aggregate.append(entry)

    agg_path = out_dir / "bench_aggregate.csv"
    if aggregate:
        with agg_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(aggregate[0].keys()))
            writer.writeheader()
            for entry in aggregate:
                writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in entry.items()})

    report = {
        "grid": {"n": list(ns), "d": list(ds), "lag": list(lags)},
        "seeds_per_cell": seeds,
        "master_seed": master_seed,
        "density": density,
        "rows": rows,
        "aggregate": aggregate,
        "failures": failures,
        "long_csv": str(long_path),
        "aggregate_csv": str(agg_path),
    }
    with (out_dir / "bench_report.json").open("w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
