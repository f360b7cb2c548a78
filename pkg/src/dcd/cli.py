"""Command-line interface.

Subcommands: discover, synth, eval, bench, verify-projection, decompose,
trendtest, seasontest, residual. A JSON config file (--config) can supply
any RunConfig field; explicit CLI flags override file values. Exit codes:
0 success, 2 configuration error, 3 data error, 4 internal numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .decompose import decompose_all, leakage
from .dependence import hsic_perm_test
from .errors import (
    ConfigError,
    DcdError,
    InvalidSpecError,
    MalformedDocumentError,
    ParseError,
    PipelineError,
    SchemaVersionMismatchError,
    VariableMismatchError,
)
from .graph import (
    MatchingConvention,
    dump_json,
    evaluate,
    load_json,
    to_dot,
)
from .pipeline import RunConfig, bench, discover, verify_projection
from .residual import residual_discovery
from .stationarity import classify_trend
from .synth import SynthSpec, benchmark_suite, generate
from .timeseries import IngestOptions, load_csv, save_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

DEC_SCHEMA = "dcd-decomposition/1"

_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def _write_json(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _build_config(args) -> RunConfig:
    """File values first, explicit CLI flags on top of them."""
    values = {}
    if getattr(args, "config", None):
        try:
            loaded = _read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return RunConfig(**values)


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON file with RunConfig fields")
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--pc-alpha", dest="pc_alpha", type=float, default=None)
    parser.add_argument("--max-lag", dest="max_lag", type=int, default=None)
    parser.add_argument("--perms", dest="hsic_perms", type=int, default=None)
    parser.add_argument("--min-period", dest="min_period", type=int, default=None)
    parser.add_argument("--max-period", dest="max_period", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--robust", dest="robust_stl", action="store_const", const=True, default=None)
    parser.add_argument("--max-cond-size", dest="max_cond_size", type=int, default=None)
    parser.add_argument("--trend-regression", dest="trend_regression", choices=("c", "ct"), default=None)


def _load_matrix(args):
    options = IngestOptions(
        impute="linear" if getattr(args, "impute", None) == "linear" else "reject",
        keep_time_col=bool(getattr(args, "keep_time_col", False)),
    )
    return load_csv(args.input, options)


def _decomposition_doc(dec) -> dict:
    report = leakage(dec)
    return {
        "version": DEC_SCHEMA,
        "vars": list(dec.var_names),
        "variables": [
            {
                "var": v.name,
                "period": v.period,
                "seasonal_variance": v.seasonal_variance,
                "is_seasonal": v.is_seasonal,
                "trend": [float(x) for x in v.trend],
                "seasonal": [float(x) for x in v.seasonal],
                "residual": [float(x) for x in v.residual],
            }
            for v in dec.variables
        ],
        "leakage": {
            "lambda_hat": report.lambda_hat,
            "argmax_pair": list(report.argmax_pair),
            "matrix": [[None if x != x else float(x) for x in row] for row in report.matrix],
            "row_labels": list(report.row_labels),
            "col_labels": list(report.col_labels),
        },
    }


def _load_decomposition(path):
    doc = _read_json(path)
    if not isinstance(doc, dict) or doc.get("version") != DEC_SCHEMA:
        raise MalformedDocumentError(f"expected a {DEC_SCHEMA} document")
    return doc


def cmd_discover(args):
    cfg = _build_config(args)
    matrix = _load_matrix(args)
    result = discover(matrix, cfg)
    dump_json(result.graph, args.out)
    if args.manifest:
        _write_json(result.manifest, args.manifest)
    if args.dot:
        Path(args.dot).write_text(to_dot(result.graph), encoding="utf-8")
    print(f"discovered {len(result.graph.edges)} edges over {matrix.d} variables -> {args.out}")
    return EXIT_OK


def cmd_synth(args):
    spec = SynthSpec(
        n=args.n, d=args.vars, lag=args.lag, seed=args.seed, density=args.density
    )
    matrix, truth = generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"synth_n{spec.n}_d{spec.d}_l{spec.lag}_seed{spec.seed}"
    data_path = out_dir / f"{stem}.csv"
    truth_path = out_dir / f"{stem}_truth.json"
    save_csv(matrix, data_path)
    from .graph import to_json as graph_to_json

    doc = graph_to_json(truth.to_causal_graph(matrix.var_names))
    doc["generator"] = truth.params
    _write_json(doc, truth_path)
    print(f"wrote {data_path} and {truth_path}")
    return EXIT_OK


def cmd_synth_grid(args):
    manifest = benchmark_suite(
        args.out_dir,
        ns=args.n,
        ds=args.vars,
        lags=args.lag,
        seeds=args.seeds,
        master_seed=args.seed,
        density=args.density,
    )
    print(f"wrote {len(manifest['datasets'])} dataset pairs to {args.out_dir}")
    return EXIT_OK


def cmd_eval(args):
    pred = load_json(args.pred)
    truth = load_json(args.truth)
    convention = MatchingConvention(include_time_edges=not args.residual_only)
    report = evaluate(pred, truth, convention)
    doc = report.to_dict()
    if args.out:
        _write_json(doc, args.out)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_bench(args):
    cfg = _build_config(args)
    report = bench(
        args.out_dir,
        ns=args.n,
        ds=args.vars,
        lags=args.lag,
        seeds=args.seeds,
        master_seed=cfg.seed,
        density=args.density,
        cfg=cfg,
    )
    for entry in report["aggregate"]:
        print(
            f"n={entry['n']} d={entry['d']} lag={entry['lag']}: "
            f"TPR {entry['tpr_mean']:.3f}+-{entry['tpr_std']:.3f} "
            f"FDR {entry['fdr_mean']:.3f}+-{entry['fdr_std']:.3f} "
            f"SHD {entry['shd_mean']:.2f}"
        )
    if report["failures"]:
        print(f"{len(report['failures'])} cell(s) failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify_projection(args):
    cfg = _build_config(args)
    report = verify_projection(seeds=args.seeds, cfg=cfg)
    if args.out:
        _write_json(report, args.out)
    print(
        f"mean |corr(S_X_hat, R_Y_hat)| over {args.seeds} seeds: "
        f"{report['mean_abs_corr']:.5f} (pass: {report['pass']}); "
        f"lag-1 link detected in {report['lag1_detection_rate']:.0%} of seeds"
    )
    return EXIT_OK if report["pass"] else EXIT_NUMERIC


def cmd_decompose(args):
    cfg = _build_config(args)
    matrix = _load_matrix(args)
    dec = decompose_all(
        matrix, range(cfg.min_period, cfg.max_period + 1), cfg.tau, cfg.stl_params
    )
    _write_json(_decomposition_doc(dec), args.out)
    seasonal = [v.name for v in dec.variables if v.is_seasonal]
    print(f"decomposed {matrix.d} variables; seasonal: {seasonal or 'none'} -> {args.out}")
    return EXIT_OK


def cmd_trendtest(args):
    cfg = _build_config(args)
    doc = _load_decomposition(args.input)
    rows = []
    for item in doc["variables"]:
        from .decompose import trend_window

        span = trend_window(item["period"] if item["period"] else 12)
        verdict = classify_trend(
            np.asarray(item["trend"], dtype=float),
            alpha=cfg.alpha,
            regression=cfg.trend_regression,
            smooth_span=span,
        )
        rows.append(
            {
                "var": item["var"],
                "adf_stat": None if verdict.adf_stat != verdict.adf_stat else verdict.adf_stat,
                "adf_p": verdict.adf_p,
                "kpss_stat": None if verdict.kpss_stat != verdict.kpss_stat else verdict.kpss_stat,
                "kpss_p": verdict.kpss_p,
                "nonstationary": verdict.nonstationary,
            }
        )
    print(json.dumps(rows, indent=2, sort_keys=True))
    if args.out:
        _write_json(rows, args.out)
    return EXIT_OK


def cmd_seasontest(args):
    cfg = _build_config(args)
    doc = _load_decomposition(args.input)
    rows = []
    for i, item in enumerate(doc["variables"]):
        if not item["is_seasonal"]:
            rows.append({"var": item["var"], "stat": None, "p": None, "significant": False})
            continue
        result = hsic_perm_test(
            np.asarray(item["seasonal"], dtype=float),
            permutations=cfg.hsic_perms,
            alpha=cfg.alpha,
            seed=int(np.random.SeedSequence((cfg.seed, i)).generate_state(1)[0]),
        )
        rows.append(
            {
                "var": item["var"],
                "stat": result.statistic,
                "p": result.p_value,
                "significant": result.significant,
            }
        )
    print(json.dumps(rows, indent=2, sort_keys=True))
    if args.out:
        _write_json(rows, args.out)
    return EXIT_OK


def cmd_residual(args):
    cfg = _build_config(args)
    doc = _load_decomposition(args.input)
    residuals = np.column_stack(
        [np.asarray(item["residual"], dtype=float) for item in doc["variables"]]
    )
    graph = residual_discovery(
        residuals, cfg.max_lag, cfg.alpha, cfg.pc_alpha, cfg.max_cond_size
    )
    out_doc = {
        "d": graph.d,
        "tau_max": graph.tau_max,
        "alpha": graph.alpha,
        "ci_test": graph.ci_test,
        "vars": doc["vars"],
        "edges": [
            {
                "src": e.src,
                "dst": e.dst,
                "lag": e.lag,
                "oriented": e.oriented,
                "stat": e.stat,
                "p": e.p_value,
            }
            for e in graph.edges
        ],
    }
    _write_json(out_doc, args.out)
    print(f"found {len(graph.edges)} residual edges -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcd", description="Decomposition-based causal discovery"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="full pipeline on a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.add_argument("--dot", default=None)
    p.add_argument("--impute", choices=("reject", "linear"), default="reject")
    p.add_argument("--keep-time-col", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("synth", help="generate one synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vars", type=int, required=True)
    p.add_argument("--lag", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("synth-grid", help="generate the benchmark grid")
    p.add_argument("--n", type=int, nargs="+", default=[500, 1000, 1500])
    p.add_argument("--vars", type=int, nargs="+", default=[4, 6, 8, 10])
    p.add_argument("--lag", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth_grid)

    p = sub.add_parser("eval", help="score a predicted graph against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--residual-only", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="synth -> discover -> eval over a grid")
    p.add_argument("--n", type=int, nargs="+", default=[500, 1000])
    p.add_argument("--vars", type=int, nargs="+", default=[4, 6])
    p.add_argument("--lag", type=int, nargs="+", default=[2])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify-projection", help="seasonal leakage experiment")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--out", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_verify_projection)

    p = sub.add_parser("decompose", help="decompose a CSV into components")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--impute", choices=("reject", "linear"), default="reject")
    p.add_argument("--keep-time-col", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("trendtest", help="ADF/KPSS verdicts per variable")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_trendtest)

    p = sub.add_parser("seasontest", help="HSIC verdicts per seasonal variable")
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_seasontest)

    p = sub.add_parser("residual", help="residual causal discovery from dec.json")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_residual)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InvalidSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        ParseError,
        MalformedDocumentError,
        SchemaVersionMismatchError,
        VariableMismatchError,
        FileNotFoundError,
        OSError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PipelineError, DcdError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
