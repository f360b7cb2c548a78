"""Constraint-based discovery of lagged and contemporaneous residual edges.

Lagged links are found with a two-phase procedure: a liberal per-target
condition-selection pass (each candidate parent is retested given the
strongest q other candidates, q growing, insignificant ones removed), then a
confirmation pass that retests every surviving link conditioned on the
selected parents of both endpoints (the source's parents time-shifted) and
keeps it only at the final significance level. Contemporaneous links come
from a PC-style skeleton over the lag-0 nodes in which every test also
conditions on both endpoints' lagged parents, followed by collider
orientation and Meek propagation restricted to lag-0 edges.

All conditional-independence tests are partial correlations with Fisher-z
p-values. Tie-breaking is canonical (|rho| descending, then (var, lag)
lexicographic) and sepsets are chosen by maximal p-value, so results are
invariant to variable relabeling up to the induced permutation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import (
    SingularConditioningSetError,
    TooShortForLagError,
)

#: A lagged node: (variable index, lag); lag 0 is the current time step.
Node = tuple[int, int]

DEFAULT_PC_ALPHA = 0.2
DEFAULT_MAX_COND_SIZE = 3
_RIDGE = 1e-8


@dataclass(frozen=True)
class LaggedEdge:
    """Directed (or, at lag 0, possibly undirected) residual edge.

    Temporal priority orients every lag >= 1 edge; undirected lag-0 edges
    are stored once with src < dst.
    """

    src: int
    dst: int
    lag: int
    oriented: bool
    stat: float
    p_value: float

    def __post_init__(self):
        if self.lag < 0:
            raise ValueError("lag must be >= 0")
        if self.lag >= 1 and not self.oriented:
            raise ValueError("lagged edges are oriented by temporal priority")
        if self.lag == 0 and self.src == self.dst:
            raise ValueError("contemporaneous self-loops are not allowed")
        if self.lag == 0 and not self.oriented and not self.src < self.dst:
            raise ValueError("undirected edges are stored once with src < dst")
        if abs(self.stat) > 1.0 + 1e-12:
            raise ValueError("partial correlation out of [-1, 1]")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.src, self.dst, self.lag)


@dataclass(frozen=True)
class ResidualGraph:
    d: int
    tau_max: int
    edges: tuple[LaggedEdge, ...]
    alpha: float
    ci_test: str = "partial_correlation"
    n_confirmation_tests: int = 0
    lagged_parents: tuple[tuple[Node, ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        keys = [e.key for e in self.edges]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (src, dst, lag) edge")
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.key)))


@dataclass(frozen=True)
class LaggedDesign:
    """Time-lagged embedding of a residual matrix.

    Row t of ``data`` holds R_j(t - lag) for every (lag, variable) label,
    lag-major order; ``matrix`` keeps the source residuals so tests needing
    deeper shifts (confirmation conditions) can realign on the fly.
    """

    data: np.ndarray
    labels: tuple[Node, ...]
    matrix: np.ndarray = field(repr=False)
    tau_max: int

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_lagged_design(r: np.ndarray, tau_max: int) -> LaggedDesign:
    """Stack lagged copies of every column, labels in (lag, var) order."""
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("residual matrix must be 2-D")
    n, d = r.shape
    if tau_max < 0:
        raise ValueError("tau_max must be >= 0")
    if n <= tau_max + d * (tau_max + 1) + 10:
        raise TooShortForLagError(
            f"n={n} is too short for tau_max={tau_max} with d={d} "
            f"(need n > {tau_max + d * (tau_max + 1) + 10})"
        )
    labels = tuple((v, lag) for lag in range(tau_max + 1) for v in range(d))
    cols = [r[tau_max - lag : n - lag, v] for (v, lag) in labels]
    return LaggedDesign(data=np.column_stack(cols), labels=labels, matrix=r, tau_max=tau_max)


def partial_corr_test(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray | None = None,
    n_eff: int | None = None,
) -> tuple[float, float]:
    """Partial correlation of x and y given the columns of z, with Fisher z.

    rho is the correlation of the OLS residuals of x and y each regressed on
    z (plus an intercept); p is two-sided normal on
    atanh(rho) * sqrt(n_eff - |z| - 3). Singular conditioning sets get one
    ridge-stabilized retry; degenerate residuals yield (0, 1).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.size
    if y.size != n:
        raise ValueError("x and y must have equal length")
    if n_eff is None:
        n_eff = n
    k = 0
    if z is not None and z.size > 0:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            z = z[:, None]
        k = z.shape[1]
        if k >= n_eff - 3:
            raise SingularConditioningSetError(
                f"conditioning set of size {k} needs n_eff > {k + 3}, got {n_eff}"
            )
        design = np.column_stack([np.ones(n), z])
        gram = design.T @ design
        rhs = design.T @ np.column_stack([x, y])
        try:
            beta = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            try:
                beta = np.linalg.solve(gram + _RIDGE * np.eye(gram.shape[0]), rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularConditioningSetError(
                    f"conditioning set remained singular after ridge: {exc}"
                ) from exc
        rx = x - design @ beta[:, 0]
        ry = y - design @ beta[:, 1]
    else:
        rx = x - x.mean()
        ry = y - y.mean()

    sx = float(np.sqrt((rx @ rx) / n))
    sy = float(np.sqrt((ry @ ry) / n))
    if sx < 1e-12 or sy < 1e-12:
        return 0.0, 1.0
    rho = float(np.clip((rx @ ry) / (n * sx * sy), -1.0, 1.0))

    df = n_eff - k - 3
    if df <= 0:
        return rho, 1.0
    if abs(rho) >= 1.0:
        return rho, 0.0
    z_stat = math.atanh(rho) * math.sqrt(df)
    return rho, float(2.0 * norm.sf(abs(z_stat)))


def _ci_test(r: np.ndarray, x_node: Node, y_node: Node, z_nodes) -> tuple[float, float]:
    """CI test between lagged nodes, aligned on the deepest lag involved."""
    nodes = [x_node, y_node, *z_nodes]
    max_lag = max(lag for _, lag in nodes)
    n = r.shape[0]
    n_eff = n - max_lag

    def series(node: Node) -> np.ndarray:
        v, lag = node
        return r[max_lag - lag : n - lag, v]

    z = np.column_stack([series(nd) for nd in z_nodes]) if z_nodes else None
    return partial_corr_test(series(x_node), series(y_node), z, n_eff=n_eff)


@dataclass(frozen=True)
class LaggedDiscovery:
    edges: tuple[LaggedEdge, ...]
    parents: tuple[tuple[Node, ...], ...]
    n_confirmation_tests: int


def _select_parents(r: np.ndarray, j: int, tau_max: int, pc_alpha: float) -> list[Node]:
    """Condition-selection: shrink lagged candidates for target j."""
    d = r.shape[1]
    strength: dict[Node, float] = {}
    target = (j, 0)
    for i in range(d):
        for lag in range(1, tau_max + 1):
            rho, p = _ci_test(r, (i, lag), target, [])
            if p < pc_alpha:
                strength[(i, lag)] = abs(rho)

    q = 1
    while q <= len(strength) - 1:
        order = sorted(strength, key=lambda c: (-strength[c], c))
        removals = []
        for cand in order:
            conds = [c for c in order if c != cand][:q]
            rho, p = _ci_test(r, cand, target, conds)
            if p >= pc_alpha:
                removals.append(cand)
            else:
                strength[cand] = abs(rho)
        for cand in removals:
            del strength[cand]
        q += 1
    return sorted(strength, key=lambda c: (-strength[c], c))


def discover_lagged(
    design: LaggedDesign, alpha: float, pc_alpha: float = DEFAULT_PC_ALPHA
) -> LaggedDiscovery:
    """Two-phase lagged discovery; every kept edge has p < alpha."""
    r = design.matrix
    d = design.d
    parents = [_select_parents(r, j, design.tau_max, pc_alpha) for j in range(d)]

    edges = []
    n_tests = 0
    for j in range(d):
        for (i, lag) in parents[j]:
            conds = set(c for c in parents[j] if c != (i, lag))
            conds.update((k, m + lag) for (k, m) in parents[i])
            conds.discard((i, lag))
            conds.discard((j, 0))
            rho, p = _ci_test(r, (i, lag), (j, 0), sorted(conds))
            n_tests += 1
            if p < alpha:
                edges.append(
                    LaggedEdge(src=i, dst=j, lag=lag, oriented=True, stat=rho, p_value=p)
                )
    return LaggedDiscovery(
        edges=tuple(edges),
        parents=tuple(tuple(p) for p in parents),
        n_confirmation_tests=n_tests,
    )


def _orient_lag0(
    d: int,
    adj: dict[int, set[int]],
    sepsets: dict[tuple[int, int], frozenset[int]],
    records: dict[tuple[int, int], tuple[float, float]],
) -> list[LaggedEdge]:
    """Collider rule, Meek propagation, then a cycle-safety pass."""
    # orientation per unordered pair: None, (src, dst), or 'conflict'
    orient: dict[tuple[int, int], object] = {}

    def set_dir(a: int, b: int):
        key = (min(a, b), max(a, b))
        want = (a, b)
        if key in orient and orient[key] not in (want,):
            orient[key] = "conflict"
        else:
            orient[key] = want

    for k in range(d):
        for i, j in itertools.combinations(sorted(adj[k]), 2):
            if j in adj[i]:
                continue
            if k not in sepsets.get((min(i, j), max(i, j)), frozenset()):
                set_dir(i, k)
                set_dir(j, k)

    def directed(a: int, b: int) -> bool:
        return orient.get((min(a, b), max(a, b))) == (a, b)

    def undirected(a: int, b: int) -> bool:
        return b in adj[a] and orient.get((min(a, b), max(a, b))) is None

    changed = True
    while changed:
        changed = False
        for a in range(d):
            for b in sorted(adj[a]):
                if not undirected(a, b):
                    continue
                # Meek 1: c -> a, c and b non-adjacent
                if any(directed(c, a) and b not in adj[c] and c != b for c in sorted(adj[a])):
                    set_dir(a, b)
                    changed = True
                    continue
                # Meek 2: a -> c -> b
                if any(directed(a, c) and directed(c, b) for c in sorted(adj[a] & adj[b])):
                    set_dir(a, b)
                    changed = True
                    continue
                # Meek 3: a - c1 -> b, a - c2 -> b, c1 and c2 non-adjacent
                # (rules 1-3 are complete when orientations start from
                # colliders only; rule 4 needs external background knowledge)
                pointing = [c for c in sorted(adj[a] & adj[b]) if undirected(a, c) and directed(c, b)]
                if any(
                    c2 not in adj[c1]
                    for c1, c2 in itertools.combinations(pointing, 2)
                ):
                    set_dir(a, b)
                    changed = True

    # cycle safety: un-orient the weakest edge of any directed cycle
    def find_cycle_edges() -> list[tuple[int, int]]:
        arcs = [v for v in orient.values() if isinstance(v, tuple)]
        graph = {i: [] for i in range(d)}
        for a, b in arcs:
            graph[a].append(b)
        color = {i: 0 for i in range(d)}
        stack_path: list[int] = []
        found: list[tuple[int, int]] = []

        def dfs(u: int) -> bool:
            color[u] = 1
            stack_path.append(u)
            for v in sorted(graph[u]):
                if color[v] == 1:
                    k = stack_path.index(v)
                    cycle = stack_path[k:] + [v]
                    found.extend(zip(cycle[:-1], cycle[1:]))
                    return True
                if color[v] == 0 and dfs(v):
                    return True
            color[u] = 2
            stack_path.pop()
            return False

        for u in range(d):
            if color[u] == 0 and dfs(u):
                return found
        return []

    while True:
        cycle = find_cycle_edges()
        if not cycle:
            break
        weakest = max(
            cycle, key=lambda ab: (records[(min(ab), max(ab))][1], (min(ab), max(ab)))
        )
        orient[(min(weakest), max(weakest))] = "conflict"

    out = []
    for i in range(d):
        for j in range(i + 1, d):
            if j not in adj[i]:
                continue
            rho, p = records[(i, j)]
            direction = orient.get((i, j))
            if isinstance(direction, tuple):
                src, dst = direction
                out.append(
                    LaggedEdge(src=src, dst=dst, lag=0, oriented=True, stat=rho, p_value=p)
                )
            else:
                out.append(LaggedEdge(src=i, dst=j, lag=0, oriented=False, stat=rho, p_value=p))
    return out


def discover_contemporaneous(
    design: LaggedDesign,
    lagged_parents,
    alpha: float,
    max_cond_size: int = DEFAULT_MAX_COND_SIZE,
) -> tuple[LaggedEdge, ...]:
    """PC skeleton over lag-0 nodes with lagged parents always conditioned on.

    Separating sets are chosen by maximal p-value at each level (not first
    found), which makes the output exactly label-order invariant; neighbor
    sets are frozen per level (PC-stable).
    """
    r = design.matrix
    d = design.d
    parents = [set(p) for p in lagged_parents]
    adj: dict[int, set[int]] = {i: set(range(d)) - {i} for i in range(d)}
    sepsets: dict[tuple[int, int], frozenset[int]] = {}
    records: dict[tuple[int, int], tuple[float, float]] = {}

    for i in range(d):
        for j in range(i + 1, d):
            base = sorted(parents[i] | parents[j])
            rho, p = _ci_test(r, (i, 0), (j, 0), base)
            records[(i, j)] = (rho, p)
            if p >= alpha:
                adj[i].discard(j)
                adj[j].discard(i)
                sepsets[(i, j)] = frozenset()

    for q in range(1, max_cond_size + 1):
        frozen = {i: sorted(adj[i]) for i in range(d)}
        for i in range(d):
            for j in range(i + 1, d):
                if j not in adj[i]:
                    continue
                pool = sorted((set(frozen[i]) | set(frozen[j])) - {i, j})
                if len(pool) < q:
                    continue
                best: tuple[float, float, frozenset[int]] | None = None
                for subset in itertools.combinations(pool, q):
                    conds = sorted(
                        parents[i] | parents[j] | {(s, 0) for s in subset}
                    )
                    rho, p = _ci_test(r, (i, 0), (j, 0), conds)
                    if best is None or p > best[1]:
                        best = (rho, p, frozenset(subset))
                if best is None:
                    continue
                if best[1] >= alpha:
                    adj[i].discard(j)
                    adj[j].discard(i)
                    sepsets[(i, j)] = best[2]
                elif best[1] > records[(i, j)][1]:
                    records[(i, j)] = (best[0], best[1])

    return tuple(_orient_lag0(d, adj, sepsets, records))


def residual_discovery(
    r: np.ndarray,
    tau_max: int,
    alpha: float = 0.05,
    pc_alpha: float = DEFAULT_PC_ALPHA,
    max_cond_size: int = DEFAULT_MAX_COND_SIZE,
) -> ResidualGraph:
    """Full residual-graph discovery on a residual matrix.

    Columns are re-standardized first so thresholds are scale-free;
    constant columns survive as isolated nodes.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        r = r[:, None]
    mean = r.mean(axis=0)
    std = r.std(axis=0, ddof=1)
    std = np.where(std == 0.0, 1.0, std)
    r = (r - mean) / std

    design = build_lagged_design(r, tau_max)
    lagged = discover_lagged(design, alpha=alpha, pc_alpha=pc_alpha)
    contemp = discover_contemporaneous(
        design, lagged.parents, alpha=alpha, max_cond_size=max_cond_size
    )
    return ResidualGraph(
        d=design.d,
        tau_max=tau_max,
        edges=lagged.edges + contemp,
        alpha=alpha,
        n_confirmation_tests=lagged.n_confirmation_tests,
        lagged_parents=lagged.parents,
    )


def contemporaneous_is_acyclic(graph: ResidualGraph) -> bool:
    """Topological check over the oriented lag-0 subgraph."""
    arcs = [(e.src, e.dst) for e in graph.edges if e.lag == 0 and e.oriented]
    succ: dict[int, list[int]] = {}
    indeg: dict[int, int] = {}
    nodes = set()
    for a, b in arcs:
        succ.setdefault(a, []).append(b)
        indeg[b] = indeg.get(b, 0) + 1
        nodes.update((a, b))
    queue = [u for u in sorted(nodes) if indeg.get(u, 0) == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for v in succ.get(u, []):
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == len(nodes)
