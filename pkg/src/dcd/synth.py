"""Ground-truth synthetic benchmark generator.

Each variable is baseline + linear trend + sinusoidal seasonality + a
residual process with lower-triangular contemporaneous and lagged couplings:

    e_i(t) = sum_{j<i} sum_{l=0..lag} a_ijl * e_j(t-l) + noise_i(t)
    X_i(t) = mu_i + beta_i * t + A_i * sin(2*pi*t / omega_i) + e_i(t)

Active couplings are a density-subsampled subset of the (j<i, l) slots and
form the residual ground truth; variables with beta_i > 0 (resp. A_i > 0)
carry trend (resp. seasonal) TIME edges. Everything is deterministic given
the spec, including the benchmark grid (per-cell streams are derived from
the master seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError
from .graph import TIME, CausalGraph, Edge, to_json
from .timeseries import TimeSeriesMatrix, save_csv

_SPECTRAL_RADIUS_LIMIT = 0.95
_MAX_RESAMPLES = 100


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters; ranges follow the benchmark design."""

    n: int
    d: int
    lag: int
    seed: int
    density: float = 0.5
    noise_std: float = 0.1
    coef_range: tuple[float, float] = (0.3, 0.8)
    baseline_range: tuple[float, float] = (5.0, 12.0)
    trend_range: tuple[float, float] = (0.0, 0.2)
    amplitude_range: tuple[float, float] = (0.0, 4.0)
    period_range: tuple[int, int] = (12, 25)
    trend_prob: float = 0.5
    seasonal_prob: float = 0.5

    def __post_init__(self):
        if self.n < 100:
            raise InvalidSpecError(f"n must be >= 100, got {self.n}")
        if self.d < 2:
            raise InvalidSpecError(f"d must be >= 2, got {self.d}")
        if self.lag not in (2, 3, 4):
            raise InvalidSpecError(f"lag must be one of 2, 3, 4, got {self.lag}")
        if not 0.0 <= self.density <= 1.0:
            raise InvalidSpecError(f"density must lie in [0, 1], got {self.density}")


@dataclass(frozen=True)
class GroundTruth:
    """Active residual couplings plus the trend/seasonal variable sets."""

    residual_edges: tuple[tuple[int, int, int, float], ...]  # (src, dst, lag, coef)
    trend_vars: frozenset[int]
    seasonal_vars: frozenset[int]
    params: dict = field(repr=False)

    def to_causal_graph(self, var_names) -> CausalGraph:
        edges = [
            Edge(src=src, dst=dst, lag=lag, kind="residual", oriented=True, stat=coef, p_value=0.0)
            for (src, dst, lag, coef) in self.residual_edges
        ]
        edges += [
            Edge(src=TIME, dst=i, lag=0, kind="trend", oriented=True)
            for i in sorted(self.trend_vars)
        ]
        edges += [
            Edge(src=TIME, dst=i, lag=0, kind="seasonal", oriented=True)
            for i in sorted(self.seasonal_vars)
        ]
        return CausalGraph(var_names=tuple(var_names), edges=tuple(edges))


def _companion_radius(coefs: dict[tuple[int, int, int], float], d: int, lag: int) -> float:
    """Spectral radius of the companion matrix of the reduced-form recursion."""
    b = [np.zeros((d, d)) for _ in range(lag + 1)]
    for (j, i, l), a in coefs.items():
        b[l][i, j] = a
    inv0 = np.linalg.inv(np.eye(d) - b[0])
    mats = [inv0 @ b[l] for l in range(1, lag + 1)]
    if not mats:
        return 0.0
    top = np.hstack(mats)
    bottom = np.hstack([np.eye(d * (lag - 1)), np.zeros((d * (lag - 1), d))]) if lag > 1 else None
    companion = np.vstack([top, bottom]) if bottom is not None else top
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def _in_range(value, lo, hi, what):
    arr = np.asarray(value)
    if np.any(arr < lo) or np.any(arr > hi):
        raise AssertionError(f"sampled {what} outside [{lo}, {hi}]")
    return value


def generate(spec: SynthSpec) -> tuple[TimeSeriesMatrix, GroundTruth]:
    """Generate one dataset with its ground truth, deterministically."""
    rng = np.random.default_rng(spec.seed)
    d, lag = spec.d, spec.lag

    slots = [(j, i, l) for i in range(d) for j in range(i) for l in range(lag + 1)]
    active_mask = rng.random(len(slots)) < spec.density
    active = [s for s, keep in zip(slots, active_mask) if keep]

    lo, hi = spec.coef_range
    coefs = {}
    for _ in range(_MAX_RESAMPLES):
        draws = _in_range(rng.uniform(lo, hi, len(active)), lo, hi, "coefficient")
        coefs = dict(zip(active, draws))
        if _companion_radius(coefs, d, lag) < _SPECTRAL_RADIUS_LIMIT:
            break
    else:
        raise InvalidSpecError(
            f"no stable coefficient draw within {_MAX_RESAMPLES} attempts"
        )

    has_trend = rng.random(d) < spec.trend_prob
    has_seasonal = rng.random(d) < spec.seasonal_prob
    mu = _in_range(rng.uniform(*spec.baseline_range, d), *spec.baseline_range, "baseline")
    beta = np.where(has_trend, _in_range(rng.uniform(*spec.trend_range, d), *spec.trend_range, "trend slope"), 0.0)
    amp = np.where(has_seasonal, _in_range(rng.uniform(*spec.amplitude_range, d), *spec.amplitude_range, "amplitude"), 0.0)
    p_lo, p_hi = spec.period_range
    omega = _in_range(rng.integers(p_lo, p_hi + 1, d), p_lo, p_hi, "period")

    burn = 10 * lag
    total = spec.n + burn
    noise = rng.normal(0.0, spec.noise_std, (total, d))
    e = np.zeros((total, d))
    by_dst: dict[int, list[tuple[int, int, float]]] = {i: [] for i in range(d)}
    for (j, i, l), a in coefs.items():
        by_dst[i].append((j, l, a))
    for t in range(total):
        for i in range(d):
            acc = noise[t, i]
            for (j, l, a) in by_dst[i]:
                if t - l >= 0:
                    acc += a * e[t - l, j]
            e[t, i] = acc
    e = e[burn:]

    t_idx = np.arange(spec.n)
    values = mu + beta * t_idx[:, None] + amp * np.sin(2.0 * np.pi * t_idx[:, None] / omega) + e
    names = tuple(f"x{i}" for i in range(d))

    truth = GroundTruth(
        residual_edges=tuple(sorted((j, i, l, float(coefs[(j, i, l)])) for (j, i, l) in coefs)),
        trend_vars=frozenset(int(i) for i in np.nonzero(beta > 0)[0]),
        seasonal_vars=frozenset(int(i) for i in np.nonzero(amp > 0)[0]),
        params={
            "mu": [float(v) for v in mu],
            "beta": [float(v) for v in beta],
            "amplitude": [float(v) for v in amp],
            "omega": [int(v) for v in omega],
            "density": spec.density,
            "noise_std": spec.noise_std,
            "lag": lag,
            "seed": spec.seed,
            "n": spec.n,
            "d": d,
            "burn_in": burn,
        },
    )
    return TimeSeriesMatrix(values=values, var_names=names), truth


def generate_residuals_only(spec: SynthSpec) -> tuple[np.ndarray, GroundTruth]:
    """The residual block alone (no trend/seasonal layers added)."""
    matrix, truth = generate(spec)
    t_idx = np.arange(spec.n)
    mu = np.array(truth.params["mu"])
    beta = np.array(truth.params["beta"])
    amp = np.array(truth.params["amplitude"])
    omega = np.array(truth.params["omega"])
    e = matrix.values - mu - beta * t_idx[:, None] - amp * np.sin(2.0 * np.pi * t_idx[:, None] / omega)
    return e, truth


def generate_projection_system(
    n: int = 1000,
    period: int = 12,
    seed: int = 0,
    amplitude: float = 2.0,
    trend_x: float = 1.0,
    trend_y: float = 1.0,
    noise_x: float = 0.5,
    noise_y: float = 0.5,
    seasonal_noise: float = 0.2,
    seasonal_gain: float = 1.5,
    residual_coupling: float = 0.7,
) -> tuple[TimeSeriesMatrix, dict[str, np.ndarray]]:
    """Bivariate system with a seasonal driver and a lag-1 residual driver.

    X carries a sinusoid, a linear drift scaled to [0, trend_x], and white
    noise. Y's seasonal is a gained copy of X's plus noise; Y's residual is
    driven by X's residual at lag 1. Returns the observables and every true
    component so projection/leakage claims can be checked directly.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    s_x = amplitude * np.sin(2.0 * np.pi * t / period)
    t_x = trend_x * t / n
    r_x_full = rng.normal(0.0, noise_x, n + 1)  # index -1..n-1 for the lag
    r_x = r_x_full[1:]
    x = t_x + s_x + r_x

    s_y = seasonal_gain * s_x + rng.normal(0.0, seasonal_noise, n)
    t_y = trend_y * t / n
    r_y = residual_coupling * r_x_full[:-1] + rng.normal(0.0, noise_y, n)
    y = t_y + s_y + r_y

    matrix = TimeSeriesMatrix(values=np.column_stack([x, y]), var_names=("X", "Y"))
    components = {
        "seasonal_x": s_x,
        "trend_x": t_x,
        "residual_x": r_x,
        "seasonal_y": s_y,
        "trend_y": t_y,
        "residual_y": r_y,
    }
    return matrix, components


def cell_seed(master_seed: int, n: int, d: int, lag: int, seed_index: int) -> int:
    """Independent per-cell seed derived from the master seed."""
    ss = np.random.SeedSequence((master_seed, n, d, lag, seed_index))
    return int(ss.generate_state(1)[0])


def benchmark_suite(
    out_dir: str | Path,
    ns=(500, 1000, 1500),
    ds=(4, 6, 8, 10),
    lags=(2, 3, 4),
    seeds: int = 3,
    master_seed: int = 0,
    density: float = 0.5,
) -> dict:
    """Emit one CSV + truth JSON pair per grid cell per seed, plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for n in ns:
        for d in ds:
            for lag in lags:
                for k in range(seeds):
                    spec = SynthSpec(
                        n=n, d=d, lag=lag, seed=cell_seed(master_seed, n, d, lag, k),
                        density=density,
                    )
                    matrix, truth = generate(spec)
                    stem = f"synth_n{n}_d{d}_l{lag}_s{k}"
                    data_path = out_dir / f"{stem}.csv"
                    truth_path = out_dir / f"{stem}_truth.json"
                    save_csv(matrix, data_path)
                    doc = to_json(truth.to_causal_graph(matrix.var_names))
                    doc["generator"] = truth.params
                    with truth_path.open("w", encoding="utf-8") as fh:
                        json.dump(doc, fh, indent=2, sort_keys=True)
                        fh.write("\n")
                    entries.append(
                        {
                            "n": n,
                            "d": d,
                            "lag": lag,
                            "seed_index": k,
                            "seed": spec.seed,
                            "data": data_path.name,
                            "truth": truth_path.name,
                        }
                    )
    manifest = {
        "master_seed": master_seed,
        "density": density,
        "seeds_per_cell": seeds,
        "grid": {"n": list(ns), "d": list(ds), "lag": list(lags)},
        "datasets": entries,
    }
    with (out_dir / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
