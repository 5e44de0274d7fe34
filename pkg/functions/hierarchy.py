import logging
import time
from typing import Dict, List, Optional, Set, Tuple

from storage.graph import (
    INFINITE,
    IncrementalMultigraph,
    UnknownVertexError,
    WeightDomainError,
)
from storage.utils import UnionFind
from functions.edge_generator import EdgeGenerator
from functions.hierarchy_forest import HierarchyForest, ImprovingEvent
from functions.level_pivots import (
    LevelParams,
    LevelPivotState,
    LevelStageResult,
    compute_params,
    trunc_dijkstra,
)


logger = logging.getLogger(__name__)


class TopLevel:
    """Level k: no pivots above it, so queries use exact distances in its rounded view."""

    def __init__(self, graph: IncrementalMultigraph):
        self.graph = graph
        self._cache: Dict[int, Dict[int, int]] = {}
        self.invalidations = 0

    def invalidate(self) -> None:
        if self._cache:
            self._cache = {}
        self.invalidations += 1

    def distances(self, source: int) -> Dict[int, int]:
        cached = self._cache.get(source)
        if cached is None:
            cached, _ = trunc_dijkstra(self.graph, source, INFINITE, len(self.graph) + 1)
            self._cache[source] = cached
        return cached

    def query(self, u: int, v: int) -> float:
        if u not in self.graph or v not in self.graph:
            raise UnknownVertexError("unknown vertex")
        return self.distances(u).get(v, INFINITE)


class Hierarchy:
    """All k levels of the sparsifier hierarchy over one incremental graph G.

    Weights arrive in [1, W] and are doubled once on the way in; every level
    works in the doubled units.
    """

    def __init__(self, n: int, W: int, ball_budget: Optional[int] = None):
        if n < 1 or W < 1:
            raise ValueError("n and W must be positive")
        self.n = n
        self.W = W
        self.params: List[LevelParams] = compute_params(n, 2 * W, ball_budget)
        self.k = len(self.params)
        self.ball_budget = ball_budget
        self.uf = UnionFind(n)
        self.stage = 0
        self.update_seconds = 0.0
        self.input_edges = 0
        self.graphs: Dict[int, IncrementalMultigraph] = {}
        for p in self.params:
            width = p.bhat if p.i < self.k else None
            self.graphs[p.i] = IncrementalMultigraph(prefix_width=width)
        self.pivots: Dict[int, LevelPivotState] = {
            p.i: LevelPivotState(p, self.graphs[p.i]) for p in self.params if p.i < self.k
        }
        self.forests: Dict[int, HierarchyForest] = {i: HierarchyForest(i) for i in range(1, self.k)}
        self.top = TopLevel(self.graphs[self.k])
        self.generator = EdgeGenerator(self.k)
        self.last_results: Dict[int, LevelStageResult] = {}
        self.last_events: Dict[int, List[ImprovingEvent]] = {}
        for v in range(n):
            self.pivots[1].add_vertex(v)
            for forest in self.forests.values():
                forest.add_leaf(v)
        self._run_levels(0, set())

    @property
    def graph(self) -> IncrementalMultigraph:
        return self.graphs[1]

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise UnknownVertexError("unknown vertex")

    def insert(self, u: int, v: int, w: int) -> int:
        self._check_vertex(u)
        self._check_vertex(v)
        if not 1 <= w <= self.W:
            raise WeightDomainError("weight below domain" if w < 1 else "weight above domain")
        started = time.perf_counter()
        self.stage += 1
        stage = self.stage
        for g in self.graphs.values():
            g.stage = stage
        self.generator.begin_stage()
        touched: Set[int] = set()
        if u != v:
            self.uf.union(u, v)
            self.graph.insert_edge_raw(u, v, 2 * w)
            self.input_edges += 1
            self.generator.register_base(1, u, v, 2 * w)
            touched = {x for x in (u, v) if self.graph.prefix_changed_since(x, stage)}
        self._run_levels(stage, touched)
        elapsed = time.perf_counter() - started
        self.update_seconds += elapsed
        logger.debug("stage %d: insert (%d, %d, %d) took %.6fs", stage, u, v, w, elapsed)
        return stage

    def _promote(self, i: int, v: int) -> None:
        if i + 1 < self.k:
            self.pivots[i + 1].add_vertex(v)
        else:
            self.graphs[self.k].add_vertex(v)
        for j in range(i, self.k):
            self.forests[j].add_level_vertex(i + 1, v)

    def _run_levels(self, stage: int, touched: Set[int]) -> None:
        lower_events: Optional[List[ImprovingEvent]] = None
        for i in range(1, self.k + 1):
            if i > 1:
                before = len(self.graphs[i].edges)
                touched = self.generator.apply_pending(i, self.graphs[i])
                if i == self.k:
                    if len(self.graphs[i].edges) != before:
                        self.top.invalidate()
                    break
            state = self.pivots[i]
            state.requeue_unvisited(touched)
            result = state.update_approx_pivots(stage)
            for v in result.promoted:
                self._promote(i, v)
            for v in result.changed:
                pivot = state.pivot[v]
                assert pivot is not None
                for j in range(i, self.k):
                    self.forests[j].set_pivot(i, v, pivot, state.pivot_dist[v])
            events = self.forests[i].refresh_min_pivot_dists(stage)
            self.generator.generate(
                stage,
                state,
                result,
                self.forests[i],
                events,
                lower=self.forests.get(i - 1),
                lower_events=lower_events,
            )
            self.last_results[i] = result
            self.last_events[i + 1] = events
            lower_events = events

    def level_vertices(self, i: int) -> Set[int]:
        return self.graphs[i].vertices

    def level_query(self, i: int, u: int, v: int) -> float:
        if not 1 <= i <= self.k:
            raise ValueError(f"level {i} outside 1..{self.k}")
        if i == self.k:
            return self.top.query(u, v)
        return self.pivots[i].ball_estimate(u, v)

    def chain(self, v: int) -> List[Tuple[int, Optional[int], float]]:
        """(level, pivot, level pivot distance) for each step of the chain of v; stops at an unset pivot."""
        self._check_vertex(v)
        out: List[Tuple[int, Optional[int], float]] = []
        x: Optional[int] = v
        for i in range(1, self.k):
            state = self.pivots[i]
            p = state.pivot[x]
            out.append((i, p, state.pivot_dist[x]))
            if p is None:
                break
            x = p
        return out

    def improving_pivot_events(self, since: int) -> List[Tuple[int, int, Optional[int], int]]:
        """(vertex, level, old, new) for every last-improving-pivot change since ``since``."""
        rows = []
        for i, forest in self.forests.items():
            for e in forest.improving_pivot_events(since):
                rows.append((e.vertex, i + 1, e.old_pivot, e.new_pivot))
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows

    def snapshot(self) -> List[Dict[str, object]]:
        rows: List[Dict[str, object]] = []
        for i in range(1, self.k + 1):
            g = self.graphs[i]
            edges = {"input": self.input_edges} if i == 1 else dict(self.generator.counts[i])
            state = self.pivots.get(i)
            lower = self.forests.get(i - 1)
            rows.append(
                {
                    "level": i,
                    "vertices": len(g),
                    "edges": len(g.edges),
                    "edges_by_kind": edges,
                    "pivot_changes": state.pivot_changes if state else 0,
                    "mpd_changes": lower.mpd_changes if lower else 0,
                    "trunc_dijkstra_calls": state.trunc_calls if state else 0,
                    "bhat": self.params[i - 1].bhat,
                }
            )
        return rows
