"""Multi-scale causal graph, integration, evaluation metrics, serialization.

The graph holds residual edges between variables plus trend/seasonal edges
from a distinguished TIME node. Edge sets from the component analyses are
additive: integration never mutates residual edges. Evaluation counts true
and false positives under an explicit matching convention and reports
TPR, FDR and SHD (additions + deletions + reversals).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    IndexOutOfRangeError,
    MalformedDocumentError,
    SchemaVersionMismatchError,
    VariableMismatchError,
)
from .residual import ResidualGraph

#: Sentinel source for trend/seasonal edges emitted by the time index.
TIME = "TIME"

KINDS = ("trend", "seasonal", "residual")

SCHEMA_VERSION = "dcd-graph/1"


@dataclass(frozen=True)
class Edge:
    src: object  # variable index or TIME
    dst: int
    lag: int
    kind: str
    oriented: bool
    stat: float = math.nan
    p_value: float = math.nan

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown edge kind {self.kind!r}")
        if self.kind in ("trend", "seasonal"):
            if self.src != TIME or self.lag != 0 or not self.oriented:
                raise ValueError(f"{self.kind} edges come from TIME at lag 0, oriented")
        else:
            if self.src == TIME:
                raise ValueError("residual edges cannot originate at TIME")
        if self.lag < 0:
            raise ValueError("lag must be >= 0")

    @property
    def key(self) -> tuple:
        return (self.src == TIME, self.kind, -1 if self.src == TIME else self.src, self.dst, self.lag)


def _sorted_edges(edges) -> tuple[Edge, ...]:
    return tuple(sorted(edges, key=lambda e: (KINDS.index(e.kind), e.key)))


@dataclass(frozen=True)
class CausalGraph:
    var_names: tuple[str, ...]
    edges: tuple[Edge, ...] = ()
    has_time_node: bool = True

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        d = len(self.var_names)
        keys = set()
        for e in self.edges:
            if e.dst < 0 or e.dst >= d or (e.src != TIME and (e.src < 0 or e.src >= d)):
                raise IndexOutOfRangeError(f"edge {e} references a variable outside [0, {d})")
            ident = (e.src, e.dst, e.lag, e.kind)
            if ident in keys:
                raise ValueError(f"duplicate edge {ident}")
            keys.add(ident)
        object.__setattr__(self, "edges", _sorted_edges(self.edges))

    @property
    def d(self) -> int:
        return len(self.var_names)

    def residual_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind == "residual")

    def time_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind != "residual")

    def without_time_edges(self) -> "CausalGraph":
        return replace(self, edges=self.residual_edges())


def integrate(
    gr: ResidualGraph,
    trend_vars,
    seasonal_vars,
    var_names,
    trend_stats: dict[int, tuple[float, float]] | None = None,
    seasonal_stats: dict[int, tuple[float, float]] | None = None,
) -> CausalGraph:
    """Union of the residual graph with TIME -> X edges per component verdict.

    Residual edges pass through unchanged; a variable in both index sets
    gets two TIME edges (the kinds differ, so the union is conflict-free).
    Optional stat maps annotate the TIME edges with (stat, p_value).
    """
    var_names = tuple(var_names)
    d = len(var_names)
    if d != gr.d:
        raise VariableMismatchError(f"residual graph has d={gr.d}, got {d} names")
    for idx in list(trend_vars) + list(seasonal_vars):
        if idx < 0 or idx >= d:
            raise IndexOutOfRangeError(f"variable index {idx} outside [0, {d})")

    edges = [
        Edge(
            src=e.src,
            dst=e.dst,
            lag=e.lag,
            kind="residual",
            oriented=e.oriented,
            stat=e.stat,
            p_value=e.p_value,
        )
        for e in gr.edges
    ]
    for idx in sorted(trend_vars):
        stat, p = (trend_stats or {}).get(idx, (math.nan, math.nan))
        edges.append(Edge(src=TIME, dst=idx, lag=0, kind="trend", oriented=True, stat=stat, p_value=p))
    for idx in sorted(seasonal_vars):
        stat, p = (seasonal_stats or {}).get(idx, (math.nan, math.nan))
        edges.append(Edge(src=TIME, dst=idx, lag=0, kind="seasonal", oriented=True, stat=stat, p_value=p))
    return CausalGraph(var_names=var_names, edges=tuple(edges), has_time_node=True)


@dataclass(frozen=True)
class MatchingConvention:
    """How predicted edges are matched against truth.

    Lagged residual edges match on the exact (src, dst, lag) triple; TIME
    edges on (dst, kind). For lag-0 residual edges an exact-direction match
    is a true positive, while direction mismatches (including an undirected
    edge over a pair the truth orients, or vice versa) form a reversal
    class: excluded from TP/FP/FN and counted once in SHD.
    """

    include_time_edges: bool = True

    def describe(self) -> str:
        scope = "all-edges" if self.include_time_edges else "residual-only"
        return (
            f"{scope}; lagged exact (src,dst,lag); time (dst,kind); "
            "lag-0 reversal-class; self-lags excluded"
        )


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    reversed_edges: int
    tpr: float
    fdr: float
    shd: int
    tpr_defined: bool
    fdr_defined: bool
    matching_convention: str

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "reversed": self.reversed_edges,
            "tpr": self.tpr,
            "fdr": self.fdr,
            "shd": self.shd,
            "tpr_defined": self.tpr_defined,
            "fdr_defined": self.fdr_defined,
            "matching_convention": self.matching_convention,
        }


def _edge_sets(g: CausalGraph, include_time: bool):
    lagged = set()
    time_like = set()
    lag0: dict[tuple[int, int], tuple | None] = {}
    for e in g.edges:
        if e.kind == "residual":
            if e.src == e.dst:
                continue  # self-lags are reported but excluded from metrics
            if e.lag >= 1:
                lagged.add((e.src, e.dst, e.lag))
            else:
                pair = (min(e.src, e.dst), max(e.src, e.dst))
                lag0[pair] = (e.src, e.dst) if e.oriented else None
        elif include_time:
            time_like.add((e.dst, e.kind))
    return lagged, lag0, time_like


def evaluate(
    pred: CausalGraph, truth: CausalGraph, convention: MatchingConvention = MatchingConvention()
) -> MetricsReport:
    """TPR/FDR/SHD of a predicted graph against ground truth."""
    if pred.var_names != truth.var_names:
        raise VariableMismatchError(
            f"variable names differ: {pred.var_names} vs {truth.var_names}"
        )
    p_lag, p_lag0, p_time = _edge_sets(pred, convention.include_time_edges)
    t_lag, t_lag0, t_time = _edge_sets(truth, convention.include_time_edges)

    tp = len(p_lag & t_lag) + len(p_time & t_time)
    fp = len(p_lag - t_lag) + len(p_time - t_time)
    fn = len(t_lag - p_lag) + len(t_time - p_time)
    reversed_edges = 0
    for pair, p_dir in p_lag0.items():
        if pair not in t_lag0:
            fp += 1
            continue
        if p_dir == t_lag0[pair]:
            tp += 1
        else:
            reversed_edges += 1
    fn += sum(1 for pair in t_lag0 if pair not in p_lag0)

    tpr_defined = (tp + fn) > 0
    fdr_defined = (tp + fp) > 0
    tpr = tp / (tp + fn) if tpr_defined else 0.0
    fdr = fp / (tp + fp) if fdr_defined else 0.0
    return MetricsReport(
        tp=tp,
        fp=fp,
        fn=fn,
        reversed_edges=reversed_edges,
        tpr=tpr,
        fdr=fdr,
        shd=fp + fn + reversed_edges,
        tpr_defined=tpr_defined,
        fdr_defined=fdr_defined,
        matching_convention=convention.describe(),
    )


# --- serialization ----------------------------------------------------------

def _num(value: float):
    return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)


def to_json(g: CausalGraph) -> dict:
    """Graph as a JSON-ready document, schema dcd-graph/1."""
    return {
        "version": SCHEMA_VERSION,
        "vars": list(g.var_names),
        "time_node": g.has_time_node,
        "edges": [
            {
                "src": "TIME" if e.src == TIME else int(e.src),
                "dst": int(e.dst),
                "lag": int(e.lag),
                "kind": e.kind,
                "oriented": bool(e.oriented),
                "stat": _num(e.stat),
                "p": _num(e.p_value),
            }
            for e in g.edges
        ],
    }


def from_json(doc: dict) -> CausalGraph:
    """Parse a dcd-graph/1 document; raises on version or shape problems."""
    if not isinstance(doc, dict):
        raise MalformedDocumentError("graph document must be an object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatchError(f"expected {SCHEMA_VERSION!r}, got {version!r}")
    for key in ("vars", "time_node", "edges"):
        if key not in doc:
            raise MalformedDocumentError(f"missing key {key!r}")
    edges = []
    for i, item in enumerate(doc["edges"]):
        for key in ("src", "dst", "lag", "kind", "oriented"):
            if key not in item:
                raise MalformedDocumentError(f"edge {i} missing key {key!r}")
        src = TIME if item["src"] == "TIME" else int(item["src"])
        stat = item.get("stat")
        p = item.get("p")
        try:
            edges.append(
                Edge(
                    src=src,
                    dst=int(item["dst"]),
                    lag=int(item["lag"]),
                    kind=str(item["kind"]),
                    oriented=bool(item["oriented"]),
                    stat=math.nan if stat is None else float(stat),
                    p_value=math.nan if p is None else float(p),
                )
            )
        except (ValueError, TypeError) as exc:
            raise MalformedDocumentError(f"edge {i}: {exc}") from exc
    try:
        return CausalGraph(
            var_names=tuple(str(v) for v in doc["vars"]),
            edges=tuple(edges),
            has_time_node=bool(doc["time_node"]),
        )
    except (ValueError, IndexOutOfRangeError) as exc:
        raise MalformedDocumentError(str(exc)) from exc


def dump_json(g: CausalGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json(g), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_json(path) -> CausalGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedDocumentError(f"invalid JSON: {exc}") from exc
    return from_json(doc)


def to_dot(g: CausalGraph) -> str:
    """Deterministic DOT rendering; TIME appears once, undirected edges
    render without arrowheads, residual edges carry lag labels."""
    lines = ["digraph dcd {"]
    if g.has_time_node and any(e.kind != "residual" for e in g.edges):
        lines.append('  "t" [shape=doublecircle];')
    for name in g.var_names:
        lines.append(f'  "{name}";')
    for e in g.edges:
        dst = g.var_names[e.dst]
        if e.kind == "trend":
            lines.append(f'  "t" -> "{dst}" [label="T"];')
        elif e.kind == "seasonal":
            lines.append(f'  "t" -> "{dst}" [label="S"];')
        else:
            src = g.var_names[e.src]
            attrs = f'label="lag={e.lag}"'
            if not e.oriented:
                attrs += ", dir=none"
            lines.append(f'  "{src}" -> "{dst}" [{attrs}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def residual_graph_from_truth(edges, d: int) -> ResidualGraph:
    """Build a ResidualGraph from (src, dst, lag) triples with unit stats."""
    from .residual import LaggedEdge

    out = []
    for (src, dst, lag) in edges:
        out.append(
            LaggedEdge(src=src, dst=dst, lag=lag, oriented=True, stat=1.0, p_value=0.0)
        )
    return ResidualGraph(d=d, tau_max=max((l for _, _, l in edges), default=0), edges=tuple(out), alpha=0.0)
