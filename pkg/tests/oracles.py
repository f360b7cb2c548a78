"""Independent oracle implementations used to cross-check the package.

Each oracle derives its answer by a different route than the code under
test: explicit double sums instead of matrix traces, normal equations
instead of library regressions, precision matrices instead of residual
correlations, plain set comparisons instead of the evaluator, and so on.
"""

from __future__ import annotations

import numpy as np


def hsic_double_sum(x, y, bw_x, bw_y):
    """Biased HSIC via the expanded three-term double-sum formula."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    k = np.empty((n, n))
    l = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            k[i, j] = np.exp(-((x[i] - x[j]) ** 2) / (2.0 * bw_x**2))
            l[i, j] = np.exp(-((y[i] - y[j]) ** 2) / (2.0 * bw_y**2))
    term1 = 0.0
    for i in range(n):
        for j in range(n):
            term1 += k[i, j] * l[i, j]
    term1 /= n * n
    term2 = 0.0
    for i in range(n):
        term2 += k[i, :].sum() * l[i, :].sum()
    term2 *= 2.0 / n**3
    term3 = k.sum() * l.sum() / n**4
    return term1 - term2 + term3


def partial_corr_precision(data):
    """Partial correlation of columns 0 and 1 given the rest, via the
    inverse correlation matrix."""
    corr = np.corrcoef(np.asarray(data, dtype=float).T)
    prec = np.linalg.inv(corr)
    return -prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1])


def adf_t_ratio(y, lag, regression):
    """ADF regression t-ratio on the lagged level, by normal equations."""
    y = np.asarray(y, dtype=float)
    dy = np.diff(y)
    rows = dy.size - lag
    cols = [y[lag:-1], np.ones(rows)]
    if regression == "ct":
        cols.append(np.arange(rows, dtype=float))
    for i in range(1, lag + 1):
        cols.append(dy[lag - i : dy.size - i])
    design = np.column_stack(cols)
    target = dy[lag:]
    gram = design.T @ design
    beta = np.linalg.solve(gram, design.T @ target)
    resid = target - design @ beta
    dof = rows - design.shape[1]
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(gram)
    return beta[0] / np.sqrt(cov[0, 0])


def phase_means_pattern(x, period):
    """Per-phase means tiled to length n: the cycle-mean seasonal oracle."""
    x = np.asarray(x, dtype=float)
    n = x.size
    phases = np.arange(n) % period
    means = np.array([x[phases == p].mean() for p in range(period)])
    means -= means.mean()
    return means[phases]


def periodogram_peak_period(x, min_period=2, max_period=None):
    """Dominant period from the raw FFT periodogram."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = x.size
    if max_period is None:
        max_period = n // 2
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(n)
    best_period, best_power = None, -1.0
    for idx in range(1, freqs.size):
        period = 1.0 / freqs[idx]
        if min_period <= period <= max_period and power[idx] > best_power:
            best_power = power[idx]
            best_period = period
    return best_period


def metrics_brute_force(pred_edges, truth_edges):
    """TPR/FDR/SHD by plain set bookkeeping over edge descriptors.

    Edges are tuples: ("time", dst, kind) for trend/seasonal,
    ("lag", src, dst, lag) for lagged residual, and
    ("lag0", i, j, direction) for contemporaneous residual edges where
    direction is (src, dst) or None for undirected and i < j. Residual
    self-edges must be filtered by the caller.
    """
    pred_time = {e for e in pred_edges if e[0] == "time"}
    truth_time = {e for e in truth_edges if e[0] == "time"}
    pred_lag = {e for e in pred_edges if e[0] == "lag"}
    truth_lag = {e for e in truth_edges if e[0] == "lag"}
    pred_lag0 = {(e[1], e[2]): e[3] for e in pred_edges if e[0] == "lag0"}
    truth_lag0 = {(e[1], e[2]): e[3] for e in truth_edges if e[0] == "lag0"}

    tp = len(pred_time & truth_time) + len(pred_lag & truth_lag)
    fp = len(pred_time - truth_time) + len(pred_lag - truth_lag)
    fn = len(truth_time - pred_time) + len(truth_lag - pred_lag)
    rev = 0
    for pair, direction in pred_lag0.items():
        if pair not in truth_lag0:
            fp += 1
        elif direction == truth_lag0[pair]:
            tp += 1
        else:
            rev += 1
    for pair in truth_lag0:
        if pair not in pred_lag0:
            fn += 1
    tpr = tp / (tp + fn) if (tp + fn) else 0.0
    fdr = fp / (tp + fp) if (tp + fp) else 0.0
    return {"tp": tp, "fp": fp, "fn": fn, "rev": rev, "tpr": tpr, "fdr": fdr, "shd": fp + fn + rev}


def graph_to_descriptors(graph):
    """CausalGraph -> the descriptor tuples metrics_brute_force consumes."""
    out = []
    for e in graph.edges:
        if e.kind in ("trend", "seasonal"):
            out.append(("time", e.dst, e.kind))
        elif e.src == e.dst:
            continue
        elif e.lag >= 1:
            out.append(("lag", e.src, e.dst, e.lag))
        else:
            i, j = min(e.src, e.dst), max(e.src, e.dst)
            direction = (e.src, e.dst) if e.oriented else None
            out.append(("lag0", i, j, direction))
    return out


def ar1(rng, n, phi=0.5, sigma=0.1, burn=50):
    e = np.zeros(n + burn)
    eps = rng.normal(0.0, sigma, n + burn)
    for i in range(1, n + burn):
        e[i] = phi * e[i - 1] + eps[i]
    return e[burn:]
