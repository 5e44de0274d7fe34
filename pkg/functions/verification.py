import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field

from storage.graph import INFINITE, IncrementalMultigraph, ceil_pow2
from storage.settings import OracleSettings, load_settings
from functions.hierarchy import Hierarchy
from functions.oracle import Oracle


logger = logging.getLogger(__name__)

LEVEL_RATIO_CEILING = 7258
LEVEL_RATIO_TIGHT = 3629
EDGE_COUNT_FACTOR = 50


class InvariantResult(BaseModel):
    name: str
    passed: bool = True
    enforced: bool = True
    checked: int = 0
    counterexample: Optional[str] = None
    measured: Optional[float] = None


class InvariantReport(BaseModel):
    depth: str
    stage: int
    results: List[InvariantResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results if r.enforced)

    def failures(self) -> List[InvariantResult]:
        return [r for r in self.results if r.enforced and not r.passed]


def to_networkx(g: IncrementalMultigraph, rounded: bool = False) -> nx.Graph:
    """Simple-graph view of ``g`` keeping the lightest parallel edge."""
    out = nx.Graph()
    out.add_nodes_from(g.vertices)
    for (a, b), e in g.lightest_edges().items():
        out.add_edge(a, b, weight=e.rounded if rounded else e.weight)
    return out


def brute_force_dist(g: IncrementalMultigraph, u: int, v: int, rounded: bool = False) -> float:
    if u == v:
        return 0
    if u not in g or v not in g:
        return INFINITE
    try:
        return nx.dijkstra_path_length(to_networkx(g, rounded), u, v, weight="weight")
    except nx.NetworkXNoPath:
        return INFINITE


def materialize_level(h: Hierarchy, i: int) -> IncrementalMultigraph:
    if not 1 <= i <= h.k:
        raise ValueError(f"level {i} outside 1..{h.k}")
    return h.graphs[i].copy()


class ShadowHistory:
    """Replays running minima of chain distances from the pivot states alone.

    Each (level, vertex) keeps the stages where its chain distance or chain
    pivot moved; live mpd and last-improving pivots are compared against it.
    """

    def __init__(self, max_stages: int):
        self.max_stages = max_stages
        self.enabled = True
        self.trail: Dict[Tuple[int, int], List[Tuple[int, float, Optional[int]]]] = {}
        self.running_min: Dict[Tuple[int, int], float] = {}
        self.level_state: Dict[Tuple[int, int], Tuple[Optional[int], int]] = {}
        self.failures: List[str] = []
        self.checked = 0

    def _fail(self, message: str) -> None:
        if len(self.failures) < 20:
            self.failures.append(message)

    def record(self, h: Hierarchy) -> None:
        if not self.enabled:
            return
        if h.stage > self.max_stages:
            logger.info("shadow history disabled after %d stages", self.max_stages)
            self.enabled = False
            return
        for i, state in h.pivots.items():
            for v in sorted(state.pivot):
                pivot, dist = state.pivot[v], state.pivot_dist[v]
                prev = self.level_state.get((i, v))
                if prev is not None:
                    if dist > prev[1]:
                        self._fail(f"stage {h.stage} level {i} vertex {v}: pivot distance grew {prev[1]} -> {dist}")
                    if pivot != prev[0] and 4 * dist > 3 * prev[1]:
                        self._fail(f"stage {h.stage} level {i} vertex {v}: pivot change without 3/4 decrease")
                self.level_state[(i, v)] = (pivot, dist)
        for v in range(h.n):
            chain = h.chain(v)
            cum = 0
            for level in range(2, h.k + 1):
                key = (level, v)
                step = chain[level - 2] if level - 2 < len(chain) else None
                if step is None or step[1] is None or cum == INFINITE:
                    cum, root = INFINITE, None
                else:
                    cum, root = cum + step[2], step[1]
                self._check(h, key, cum, root)

    def _check(self, h: Hierarchy, key: Tuple[int, int], cum: float, root: Optional[int]) -> None:
        level, v = key
        forest = h.forests[level - 1]
        trail = self.trail.setdefault(key, [])
        if not trail or trail[-1][1:] != (cum, root):
            trail.append((h.stage, cum, root))
        low = min(self.running_min.get(key, INFINITE), cum)
        self.running_min[key] = low
        self.checked += 1
        live_cum = forest.cumulative(v)
        if live_cum != cum:
            self._fail(f"stage {h.stage} level {level} vertex {v}: forest distance {live_cum} != chain {cum}")
        if low == INFINITE:
            expected_mpd, expected_pbar = None, None
        else:
            expected_mpd = ceil_pow2(int(low))
            expected_pbar = next(r for _, c, r in trail if c <= expected_mpd)
        if forest.mpd[v] != expected_mpd:
            self._fail(f"stage {h.stage} level {level} vertex {v}: mpd {forest.mpd[v]} != {expected_mpd}")
        if forest.pbar[v] != expected_pbar:
            self._fail(f"stage {h.stage} level {level} vertex {v}: last improving pivot {forest.pbar[v]} != {expected_pbar}")

    def result(self) -> InvariantResult:
        return InvariantResult(
            name="mpd_shadow",
            passed=not self.failures,
            checked=self.checked,
            counterexample=self.failures[0] if self.failures else None,
        )


def _fan_out(sources: Iterable[int], work: Callable[[int], List[str]], workers: int) -> List[str]:
    found: List[str] = []
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futures = {ex.submit(work, s): s for s in sources}
        for fut in as_completed(futures):
            found.extend(fut.result())
    return sorted(found)


def _result(name: str, failures: List[str], checked: int, enforced: bool = True, measured: Optional[float] = None) -> InvariantResult:
    return InvariantResult(
        name=name,
        passed=not failures,
        enforced=enforced,
        checked=checked,
        counterexample=failures[0] if failures else None,
        measured=measured,
    )


class _Views:
    """Cached networkx views and single-source tables of the level graphs."""

    def __init__(self, h: Hierarchy):
        self.h = h
        self.plain = {i: to_networkx(h.graphs[i]) for i in h.graphs}
        self.rounded = {i: to_networkx(h.graphs[i], rounded=True) for i in h.graphs}

    def sssp(self, i: int, source: int, rounded: bool = False) -> Dict[int, float]:
        g = self.rounded[i] if rounded else self.plain[i]
        if source not in g:
            return {}
        return nx.single_source_dijkstra_path_length(g, source, weight="weight")


def _sample(rng: np.random.Generator, items: List[int], limit: Optional[int]) -> List[int]:
    if limit is None or len(items) <= limit:
        return items
    picked = rng.choice(len(items), size=limit, replace=False)
    return sorted(items[j] for j in picked)


def check_adjacency_order(h: Hierarchy) -> InvariantResult:
    failures = []
    checked = 0
    for i, g in h.graphs.items():
        for v in sorted(g.vertices):
            checked += 1
            adj = g.adjacency[v]
            if any(adj[j] > adj[j + 1] for j in range(len(adj) - 1)):
                failures.append(f"level {i} vertex {v}: adjacency out of (weight, arrival) order")
    return _result("adjacency_order", failures, checked)


def check_level_size(h: Hierarchy) -> InvariantResult:
    failures = []
    for p in h.params[:-1]:
        lower, upper = len(h.graphs[p.i]), len(h.graphs[p.i + 1])
        if upper > lower / p.b + 1e-9:
            failures.append(f"|V(H_{p.i + 1})| = {upper} > {lower}/{p.b:.3f}")
    # the bound depends on the formula value of bhat
    return _result("level_size_bound", failures, h.k - 1, enforced=h.ball_budget is None)


def check_balls(h: Hierarchy, views: _Views, vertices: Dict[int, List[int]], workers: int) -> InvariantResult:
    checked = 0
    failures: List[str] = []
    for i, state in h.pivots.items():

        def work(v: int, i: int = i, state=state) -> List[str]:
            dist = views.sssp(i, v, rounded=True)
            radius = state.pivot_dist[v] / 4
            expected = {u: d for u, d in dist.items() if d <= radius}
            out = []
            if expected != state.ball[v]:
                out.append(f"level {i} vertex {v}: ball differs from exact quarter-radius ball")
            if len(state.ball[v]) >= state.budget:
                out.append(f"level {i} vertex {v}: ball holds {len(state.ball[v])} >= bhat vertices")
            return out

        checked += len(vertices[i])
        failures.extend(_fan_out(vertices[i], work, workers))
    return _result("ball_exactness", failures, checked)


def check_sandwich(h: Hierarchy, views: _Views, vertices: Dict[int, List[int]]) -> List[InvariantResult]:
    """Pivot distance between dist to the pivot and 4x the rounded distance to V(H_{i+1})."""
    lower_failures: List[str] = []
    rounded_failures: List[str] = []
    plain_failures: List[str] = []
    worst = 0.0
    checked = 0
    for i, state in h.pivots.items():
        upper = sorted(state.upper)
        to_upper: Dict[int, float] = {}
        to_upper_rounded: Dict[int, float] = {}
        if upper:
            to_upper = nx.multi_source_dijkstra_path_length(views.plain[i], upper, weight="weight")
            to_upper_rounded = nx.multi_source_dijkstra_path_length(views.rounded[i], upper, weight="weight")
        for v in vertices[i]:
            checked += 1
            estimate = state.pivot_dist[v]
            d_set = to_upper.get(v, INFINITE)
            d_rounded = to_upper_rounded.get(v, INFINITE)
            if estimate > 4 * d_rounded:
                rounded_failures.append(f"level {i} vertex {v}: estimate {estimate} > 4 x rounded dist {d_rounded} to V(H_{i + 1})")
            if estimate > 8 * d_set:
                plain_failures.append(f"level {i} vertex {v}: estimate {estimate} > 8 x dist {d_set} to V(H_{i + 1})")
            if 0 < d_set < INFINITE:
                worst = max(worst, estimate / d_set)
            pivot = state.pivot[v]
            if pivot is None:
                continue
            d_pivot = views.sssp(i, v).get(pivot, INFINITE)
            if not d_set <= d_pivot <= estimate:
                lower_failures.append(
                    f"level {i} vertex {v}: dist to V(H_{i + 1}) {d_set}, to pivot {d_pivot}, estimate {estimate}"
                )
    return [
        _result("sandwich_lower", lower_failures, checked),
        _result("sandwich_upper", rounded_failures, checked),
        _result("sandwich_upper_h", plain_failures, checked, measured=worst),
    ]


def check_pivot_fact(h: Hierarchy, views: _Views, vertices: Dict[int, List[int]]) -> List[InvariantResult]:
    """dist_{H_i}(v, p(v)) against 4x the running minimum of the chain distance.

    Since v joined V(H_i) its chain distance is its level pivot distance, so
    the minimum over those stages is the current one. The minimum over every
    stage (the forest's mpd) is only measured.
    """
    failures: List[str] = []
    worst = 0.0
    checked = 0
    for i, state in h.pivots.items():
        forest = h.forests[i]
        for v in vertices[i]:
            pivot = state.pivot[v]
            if pivot is None:
                continue
            checked += 1
            d_pivot = views.sssp(i, v).get(pivot, INFINITE)
            if d_pivot > 4 * state.pivot_dist[v]:
                failures.append(f"level {i} vertex {v}: dist to pivot {d_pivot} > 4 x {state.pivot_dist[v]}")
            mpd = forest.mpd.get(v)
            if mpd:
                worst = max(worst, d_pivot / mpd)
    return [
        _result("pivot_distance_fact", failures, checked),
        _result("pivot_distance_vs_mpd", [] if worst <= 4 else [f"dist to pivot / mpd reached {worst:.3f}"], checked, enforced=False, measured=worst),
    ]


def pivot_change_limit(sentinel: int) -> int:
    # each assignment keeps at most 3/4 of a distance in [2, sentinel], then one drop to 0
    return math.floor(math.log(sentinel / 2, 4 / 3) + 1e-9) + 1


def mpd_change_limit(level: int, sentinel: int) -> int:
    # mpd halves at least, starting at most ceil_pow2(level x sentinel) and ending at 0
    return ceil_pow2(level * sentinel).bit_length()


def check_change_counts(h: Hierarchy) -> List[InvariantResult]:
    pivot_failures: List[str] = []
    mpd_failures: List[str] = []
    pivot_checked = mpd_checked = 0
    for i, state in h.pivots.items():
        limit = pivot_change_limit(state.sentinel)
        for v in sorted(state.pivot):
            pivot_checked += 1
            count = state.assignments.get(v, 0)
            if count > limit:
                pivot_failures.append(f"level {i} vertex {v}: {count} pivot changes > {limit}")
    for i, forest in h.forests.items():
        limit = mpd_change_limit(i, h.pivots[i].sentinel)
        for v in sorted(forest.improving):
            mpd_checked += 1
            count = len(forest.improving[v])
            if count > limit:
                mpd_failures.append(f"level {i + 1} vertex {v}: {count} mpd changes > {limit}")
    return [
        _result("pivot_change_bound", pivot_failures, pivot_checked),
        _result("mpd_change_bound", mpd_failures, mpd_checked),
    ]


def _pair_weights(g: IncrementalMultigraph) -> Dict[Tuple[int, int], int]:
    return {key: e.weight for key, e in g.lightest_edges().items()}


def _lacks_edge(weights: Dict[Tuple[int, int], int], a: int, b: int, bound: int) -> bool:
    return weights.get((min(a, b), max(a, b)), INFINITE) > bound


def check_edge_presence(h: Hierarchy) -> List[InvariantResult]:
    """Every owed hierarchy edge exists in H_{i+1} at or below its prescribed weight."""
    weights = {j: _pair_weights(h.graphs[j]) for j in range(2, h.k + 1)}
    found: Dict[str, List[str]] = {kind: [] for kind in ("ball", "history", "connector", "projected")}
    checked: Dict[str, int] = {kind: 0 for kind in found}

    def need(kind: str, level: int, a: Optional[int], b: Optional[int], bound: int, why: str) -> None:
        if a is None or b is None or a == b:
            return
        checked[kind] += 1
        if _lacks_edge(weights[level], a, b, bound):
            found[kind].append(f"level {level} {why}: no edge ({a}, {b}) of weight <= {bound}")

    for i, state in h.pivots.items():
        for u in sorted(state.pivot):
            bound = 8 * ceil_pow2(state.pivot_dist[u])
            for x in state.ball[u]:
                need("ball", i + 1, state.pivot[u], state.pivot[x], bound, f"ball {u}:{x}")
            entries = state.history[u]
            for j, (t, p, snapshot) in enumerate(entries):
                for _, q, _ in entries[j + 1:]:
                    need("history", i + 1, p, q, 8 * ceil_pow2(snapshot), f"history {u}@{t}")
    for i in range(2, h.k):
        lower, upper = h.forests[i - 1], h.forests[i]
        for v in sorted(lower.improving):
            for t, x, m in lower.improving[v]:
                if upper.pbar.get(x) is None or upper.pbar.get(v) is None:
                    continue
                bound = ceil_pow2(upper.mpd[x]) + ceil_pow2(m) + ceil_pow2(upper.mpd[v])
                need("connector", i + 1, upper.pbar[x], upper.pbar[v], bound, f"connector {v}@{t}")
    for i, forest in h.forests.items():
        for edge in h.generator.base.edges:
            if edge.level > i or forest.pbar.get(edge.x) is None or forest.pbar.get(edge.y) is None:
                continue
            bound = ceil_pow2(forest.mpd[edge.x]) + ceil_pow2(edge.weight) + ceil_pow2(forest.mpd[edge.y])
            need("projected", i + 1, forest.pbar[edge.x], forest.pbar[edge.y], bound, f"projected {edge.x}-{edge.y}")
    return [_result(f"{kind}_edge_presence", found[kind], checked[kind]) for kind in found]


def check_level_distances(h: Hierarchy, views: _Views, rng: np.random.Generator, limit: Optional[int], workers: int) -> List[InvariantResult]:
    domination: List[str] = []
    worst = 0.0
    checked = 0
    for i in range(1, h.k):
        sources = _sample(rng, sorted(h.graphs[i + 1].vertices), limit)

        def work(s: int, i: int = i) -> List[str]:
            base = views.sssp(1, s)
            upper = views.sssp(i + 1, s)
            out = []
            for t, d in upper.items():
                if base.get(t, INFINITE) > d:
                    out.append(f"level {i + 1} pair ({s}, {t}): H distance {d} < G distance {base.get(t)}")
            return out

        domination.extend(_fan_out(sources, work, workers))
        for s in sources:
            lower = views.sssp(i, s)
            upper = views.sssp(i + 1, s)
            for t, d in upper.items():
                checked += 1
                if t != s and lower.get(t, 0) > 0:
                    worst = max(worst, d / lower[t])
    results = [_result("level_domination", sorted(domination), checked)]
    over = [] if worst <= LEVEL_RATIO_CEILING else [f"dist_H(i+1) / dist_H(i) reached {worst:.2f}"]
    results.append(_result("level_ratio_ceiling", over, checked, measured=worst))
    tight = [] if worst <= LEVEL_RATIO_TIGHT else [f"dist_H(i+1) / dist_H(i) reached {worst:.2f}"]
    results.append(_result("level_ratio_3629", tight, checked, enforced=False, measured=worst))
    return results


def check_edge_lower_bound(h: Hierarchy, views: _Views, rng: np.random.Generator, limit: Optional[int], workers: int) -> InvariantResult:
    by_source: Dict[int, List[Tuple[int, int, int]]] = {}
    for i in range(2, h.k + 1):
        for e in h.graphs[i].edges:
            by_source.setdefault(e.u, []).append((i, e.v, e.weight))
    sources = _sample(rng, sorted(by_source), limit)

    def work(s: int) -> List[str]:
        base = views.sssp(1, s)
        return [
            f"level {i} edge ({s}, {t}) weight {w} < dist_G {base.get(t, INFINITE)}"
            for i, t, w in by_source[s]
            if w < base.get(t, INFINITE)
        ]

    failures = _fan_out(sources, work, workers)
    return _result("edge_lower_bound", failures, sum(len(by_source[s]) for s in sources))


def check_edge_count(h: Hierarchy) -> InvariantResult:
    m = h.input_edges
    log_nw = max(1.0, math.log2(h.n * 2 * h.W))
    bound = m + h.k * h.n * log_nw ** 5 + sum(len(h.graphs[p.i]) * p.b * log_nw ** 4 for p in h.params)
    total = sum(len(h.graphs[i].edges) for i in range(2, h.k + 1))
    failures = [] if total <= EDGE_COUNT_FACTOR * bound else [f"{total} hierarchy edges > {EDGE_COUNT_FACTOR} x {bound:.0f}"]
    return _result("edge_count_sanity", failures, 1, measured=total / bound if bound else 0.0)


def check_queries(h: Hierarchy, views: _Views, rng: np.random.Generator, limit: Optional[int], workers: int) -> List[InvariantResult]:
    sources = _sample(rng, list(range(h.n)), limit)
    ceiling = Oracle(h).stretch_ceiling

    def work(s: int) -> List[str]:
        # one oracle per source; counters are not shared across threads
        oracle = Oracle(h)
        exact = views.sssp(1, s)
        out = []
        for t in sorted(exact):
            true = exact[t] / 2
            res = oracle.query_with_trace(s, t)
            if res.estimate is None:
                out.append(f"soundness: ({s}, {t}) reported unreachable")
                continue
            if res.estimate < true:
                out.append(f"soundness: ({s}, {t}) estimate {res.estimate} < exact {true}")
            if res.estimate > ceiling * true:
                out.append(f"stretch: ({s}, {t}) estimate {res.estimate} > ceiling x {true}")
            if res.levels_used > h.k:
                out.append(f"depth: ({s}, {t}) used {res.levels_used} > k levels")
            last = res.trace[-1]
            if not res.fallback and last.pivot_u != last.pivot_v:
                d_level = views.sssp(last.level, last.pivot_u).get(last.pivot_v, INFINITE)
                internal = 2 * last.estimate
                if internal > 2 * d_level:
                    out.append(f"level estimate: ({s}, {t}) level {last.level} estimate exceeds 2 x dist_H")
        return out

    failures = _fan_out(sources, work, workers)
    checked = sum(len(views.sssp(1, s)) for s in sources)
    by_kind: Dict[str, List[str]] = {"soundness": [], "stretch": [], "depth": [], "level estimate": []}
    for f in failures:
        by_kind[f.split(":", 1)[0]].append(f)
    return [
        _result("query_soundness", by_kind["soundness"], checked),
        _result("stretch_ceiling", by_kind["stretch"], checked),
        _result("query_depth", by_kind["depth"], checked),
        _result("level_estimate_2x", by_kind["level estimate"], checked),
    ]


def run_invariant_suite(
    h: Hierarchy,
    depth: str = "cheap",
    shadow: Optional[ShadowHistory] = None,
    settings: Optional[OracleSettings] = None,
    seed: int = 0,
) -> InvariantReport:
    """Checks every maintained invariant; failures become report entries, never exceptions.

    Queries go through private oracles, so callers' query counters are untouched.
    """
    settings = settings or load_settings()
    if depth == "full" and h.n > settings.full_max_n:
        logger.warning("full check requested for n=%d > %d, running cheap checks", h.n, settings.full_max_n)
        depth = "cheap"
    rng = np.random.default_rng(seed)
    limit = None if depth == "full" else max(8, int(math.isqrt(h.n)))
    workers = settings.verify_workers
    views = _Views(h)
    vertices = {i: _sample(rng, sorted(state.pivot), limit) for i, state in h.pivots.items()}
    report = InvariantReport(depth=depth, stage=h.stage)
    report.results.append(check_adjacency_order(h))
    report.results.append(check_level_size(h))
    report.results.append(check_balls(h, views, vertices, workers))
    report.results.extend(check_sandwich(h, views, vertices))
    report.results.extend(check_level_distances(h, views, rng, limit, workers))
    report.results.append(check_edge_lower_bound(h, views, rng, limit, workers))
    report.results.append(check_edge_count(h))
    report.results.extend(check_queries(h, views, rng, limit, workers))
    if depth == "full":
        report.results.extend(check_pivot_fact(h, views, vertices))
        report.results.extend(check_change_counts(h))
        report.results.extend(check_edge_presence(h))
    if shadow is not None and shadow.enabled:
        report.results.append(shadow.result())
    for r in report.failures():
        logger.warning("invariant %s failed: %s", r.name, r.counterexample)
    return report


def measure_stretch(h: Hierarchy, oracle: Oracle, sample_pairs: int, seed: int) -> Tuple[float, float]:
    """Max and mean of estimate / exact over sampled reachable pairs; (0, 0) if none were found."""
    rng = np.random.default_rng(seed)
    g = to_networkx(h.graph)
    ratios: List[float] = []
    attempts = 0
    while len(ratios) < sample_pairs and attempts < 20 * sample_pairs:
        attempts += 1
        u, v = (int(x) for x in rng.integers(0, h.n, size=2))
        if u == v or not h.uf.connected(u, v):
            continue
        exact = nx.dijkstra_path_length(g, u, v, weight="weight") / 2
        est = oracle.query_dist(u, v).estimate
        ratios.append(est / exact)
    if not ratios:
        return 0.0, 0.0
    arr = np.asarray(ratios)
    return float(arr.max()), float(arr.mean())
