import logging
import math
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Deque, Dict, Iterable, List, Optional, Set, Tuple

from storage.graph import INFINITE, IncrementalMultigraph, UnknownVertexError


logger = logging.getLogger(__name__)

# (stage, pivot, level pivot distance) recorded whenever the stage-end pivot moves
HistoryEntry = Tuple[int, int, int]


@dataclass(frozen=True)
class LevelParams:
    i: int
    b: float
    bhat: int
    k: int
    n: int
    W: int

    @property
    def sentinel(self) -> int:
        # diameter bound n^2 W used for unset pivots
        return self.n * self.n * self.W


def num_levels(n: int) -> int:
    """Smallest k with sum_{i<=k} (6/5)^i > log2(n), never below 2."""
    target = math.log2(n)
    k = 0
    total = 0.0
    while True:
        k += 1
        total += 1.2 ** k
        if total > target:
            break
    return max(k, 2)


def compute_params(n: int, W: int, ball_budget: Optional[int] = None) -> List[LevelParams]:
    if n < 1 or W < 1:
        raise ValueError("compute_params expects n >= 1 and W >= 1")
    k = num_levels(n)
    log_term = math.log(n * n * W, 4 / 3) + 1
    params = []
    for i in range(1, k + 1):
        b = 2.0 ** (1.2 ** i)
        bhat = ball_budget if ball_budget is not None else math.ceil(b * log_term)
        params.append(LevelParams(i=i, b=b, bhat=bhat, k=k, n=n, W=W))
    return params


def trunc_dijkstra(
    graph: IncrementalMultigraph, source: int, radius: float, budget: int
) -> Tuple[Dict[int, int], bool]:
    """Dijkstra over the rounded view, stopped at ``radius`` or after ``budget`` settles.

    Vertices settle in (distance, id) order, so an aborted run returns the
    ``budget`` nearest vertices with ties going to the smaller id. Only the
    ``budget``-wide adjacency prefix of each settled vertex is relaxed.
    """
    settled: Dict[int, int] = {}
    tentative: Dict[int, int] = {source: 0}
    heap: List[Tuple[int, int]] = [(0, source)]
    while heap:
        d, x = heappop(heap)
        if x in settled:
            continue
        if d > radius:
            break
        settled[x] = d
        if len(settled) >= budget:
            return settled, True
        for edge in graph.adj_prefix(x, budget):
            nd = d + edge.rounded
            if nd > radius:
                break  # prefix is sorted by rounded weight
            y = edge.other(x)
            if y in settled:
                continue
            if nd < tentative.get(y, INFINITE):
                tentative[y] = nd
                heappush(heap, (nd, y))
    return settled, False


@dataclass
class PivotMove:
    vertex: int
    old_pivot: Optional[int]
    new_pivot: int
    old_dist: int
    new_dist: int


@dataclass
class LevelStageResult:
    stage: int
    # vertices whose pivot or pivot distance differs from the stage start
    changed: List[int] = field(default_factory=list)
    # vertices whose stage-end pivot differs from the stage-start pivot
    moved: List[PivotMove] = field(default_factory=list)
    recomputed: Set[int] = field(default_factory=set)
    promoted: List[int] = field(default_factory=list)


class LevelPivotState:
    """Approximate pivots of V(H_i) into V(H_{i+1}) plus their quarter-radius balls."""

    def __init__(self, params: LevelParams, graph: IncrementalMultigraph):
        self.params = params
        self.level = params.i
        self.graph = graph
        self.budget = params.bhat
        self.sentinel = params.sentinel
        self.pivot: Dict[int, Optional[int]] = {}
        self.pivot_dist: Dict[int, int] = {}
        self.ball: Dict[int, Dict[int, int]] = {}
        self.members: Dict[int, Set[int]] = {}
        self.history: Dict[int, List[HistoryEntry]] = {}
        self.upper: Set[int] = set()
        self.unvisited: Deque[int] = deque()
        self._queued: Set[int] = set()
        self._stage_start: Dict[int, Tuple[Optional[int], int]] = {}
        self.pivot_changes = 0
        # per-vertex count of pivot assignments
        self.assignments: Dict[int, int] = {}
        self.trunc_calls = 0

    def __contains__(self, v: object) -> bool:
        return v in self.pivot

    def add_vertex(self, v: int) -> bool:
        if v in self.pivot:
            return False
        self.graph.add_vertex(v)
        self.pivot[v] = None
        self.pivot_dist[v] = self.sentinel
        self.ball[v] = {}
        self.members.setdefault(v, set())
        self.history[v] = []
        self._enqueue(v)
        return True

    def _enqueue(self, v: int) -> None:
        if v not in self._queued:
            self._queued.add(v)
            self.unvisited.append(v)

    def requeue_unvisited(self, touched: Iterable[int]) -> List[int]:
        """Queue every vertex whose ball contains a touched vertex."""
        owners: Set[int] = set()
        for x in touched:
            owners.update(self.members.get(x, ()))
        queued = sorted(owners)
        for u in queued:
            self._enqueue(u)
        return queued

    def radius(self, v: int) -> float:
        return self.pivot_dist[v] / 4

    def trunc_dijkstra(self, v: int, radius: float) -> Tuple[Dict[int, int], bool]:
        if v not in self.pivot:
            raise UnknownVertexError("unknown vertex")
        self.trunc_calls += 1
        return trunc_dijkstra(self.graph, v, radius, self.budget)

    def _set_ball(self, v: int, dist: Dict[int, int]) -> None:
        for x in self.ball.get(v, {}):
            self.members[x].discard(v)
        self.ball[v] = dist
        for x in dist:
            self.members.setdefault(x, set()).add(v)

    def _assign(self, v: int, pivot: int, dist: int) -> None:
        old_pivot, old_dist = self.pivot[v], self.pivot_dist[v]
        assert dist < old_dist, "pivot distance must strictly decrease"
        self._stage_start.setdefault(v, (old_pivot, old_dist))
        self.pivot[v] = pivot
        self.pivot_dist[v] = dist
        self.pivot_changes += 1
        self.assignments[v] = self.assignments.get(v, 0) + 1

    def promote(self, v: int) -> None:
        """Add v to V(H_{i+1}) and requeue every ball that already holds it."""
        self.upper.add(v)
        for u in sorted(self.members.get(v, ())):
            self._enqueue(u)

    def nearest_upper(self, v: int) -> Optional[Tuple[int, int]]:
        # ball is in settle order
        for u, d in self.ball[v].items():
            if u in self.upper:
                return u, d
        return None

    def update_approx_pivots(self, stage: int) -> LevelStageResult:
        """Drain Unvisited until every quarter-radius ball holds fewer than bhat vertices."""
        self._stage_start = {}
        result = LevelStageResult(stage=stage)
        while self.unvisited:
            v = self.unvisited.popleft()
            self._queued.discard(v)
            current = self.pivot_dist[v]
            dist, aborted = self.trunc_dijkstra(v, self.radius(v))
            if not aborted:
                self._set_ball(v, dist)
                result.recomputed.add(v)
                hit = self.nearest_upper(v)
                if hit is not None and hit[1] < current:
                    self._assign(v, hit[0], hit[1])
                    self._enqueue(v)
                continue
            # dist is in settle order: nearest first, ties by id
            nearer = next((u for u, d in dist.items() if 2 * self.pivot_dist[u] < current), None)
            if nearer is not None:
                target = self.pivot[nearer]
                assert target is not None, "a vertex with a finite pivot distance has a pivot"
                self._assign(v, target, dist[nearer] + self.pivot_dist[nearer])
                self._enqueue(v)
                continue
            self.promote(v)
            result.promoted.append(v)
            logger.debug("level %d stage %d: vertex %d joins the next level", self.level, stage, v)
            for u, d in dist.items():
                self._assign(u, v, d)
                self._enqueue(u)
        self._close_stage(stage, result)
        return result

    def _close_stage(self, stage: int, result: LevelStageResult) -> None:
        for v in sorted(self._stage_start):
            old_pivot, old_dist = self._stage_start[v]
            new_pivot, new_dist = self.pivot[v], self.pivot_dist[v]
            result.changed.append(v)
            if new_pivot != old_pivot:
                assert new_pivot is not None
                self.history[v].append((stage, new_pivot, new_dist))
                result.moved.append(PivotMove(v, old_pivot, new_pivot, old_dist, new_dist))
        self._stage_start = {}

    def ball_estimate(self, u: int, v: int) -> float:
        if u not in self.pivot or v not in self.pivot:
            raise UnknownVertexError("unknown vertex")
        if u == v:
            return 0
        best = INFINITE
        d = self.ball[v].get(u)
        if d is not None:
            best = d
        d = self.ball[u].get(v)
        if d is not None and d < best:
            best = d
        return best

    def is_quiescent(self) -> bool:
        return not self.unvisited
