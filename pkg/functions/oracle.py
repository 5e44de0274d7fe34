import logging
import math
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from storage.graph import INFINITE, UnknownVertexError
from functions.hierarchy import Hierarchy
from functions.level_pivots import trunc_dijkstra


logger = logging.getLogger(__name__)


class TraceStep(BaseModel):
    level: int
    pivot_u: int
    pivot_v: int
    estimate: int


class QueryResult(BaseModel):
    u: int
    v: int
    # None means the endpoints lie in different components
    estimate: Optional[int] = None
    levels_used: int = 0
    fallback: bool = False
    trace: List[TraceStep] = Field(default_factory=list)

    @property
    def reachable(self) -> bool:
        return self.estimate is not None

    def line(self) -> str:
        shown = "UNREACHABLE" if self.estimate is None else str(self.estimate)
        return f"QUERY {self.u} {self.v} {shown}"


def to_input_units(x: int) -> int:
    # internal weights are doubled at ingestion
    return -(-x // 2)


def exact_rounded_dist(h: Hierarchy, i: int, u: int, v: int) -> float:
    g = h.graphs[i]
    if u not in g or v not in g:
        return INFINITE
    dist, _ = trunc_dijkstra(g, u, INFINITE, len(g) + 1)
    return dist.get(v, INFINITE)


class Oracle:
    """Distance queries over a maintained hierarchy; read-only between stages."""

    def __init__(self, hierarchy: Hierarchy):
        self.h = hierarchy
        self.queries = 0
        self.fallbacks = 0

    def _walk(self, u: int, v: int) -> Tuple[Optional[int], List[Tuple[int, int, int, int]], bool]:
        h = self.h
        total = 0
        steps: List[Tuple[int, int, int, int]] = []
        a, b = u, v
        for i in range(1, h.k + 1):
            est = h.level_query(i, a, b)
            if i == h.k:
                if est != INFINITE:
                    steps.append((i, a, b, int(est)))
                    return total + int(est), steps, False
                break
            state = h.pivots[i]
            pa, pb = state.pivot_dist[a], state.pivot_dist[b]
            if est != INFINITE and 8 * est <= max(pa, pb):
                steps.append((i, a, b, int(est)))
                return total + int(est), steps, False
            na, nb = state.pivot[a], state.pivot[b]
            if na is None or nb is None:
                break
            steps.append((i, a, b, pa + pb))
            total += pa + pb
            a, b = na, nb
        # cannot ascend: finish with the exact rounded distance where we stand
        level = len(steps) + 1
        exact = exact_rounded_dist(h, level, a, b)
        self.fallbacks += 1
        if exact != INFINITE:
            logger.warning("query %d %d: exact fallback at level %d", u, v, level)
            steps.append((level, a, b, int(exact)))
            return total + int(exact), steps, True
        logger.warning("query %d %d: level %d disconnected, answering from G", u, v, level)
        exact = exact_rounded_dist(h, 1, u, v)
        return int(exact), [(1, u, v, int(exact))], True

    def query_with_trace(self, u: int, v: int) -> QueryResult:
        h = self.h
        if not 0 <= u < h.n or not 0 <= v < h.n:
            raise UnknownVertexError("unknown vertex")
        self.queries += 1
        if not h.uf.connected(u, v):
            return QueryResult(u=u, v=v)
        if u == v:
            return QueryResult(u=u, v=v, estimate=0, levels_used=1, trace=[TraceStep(level=1, pivot_u=u, pivot_v=v, estimate=0)])
        internal, steps, fallback = self._walk(u, v)
        trace = [TraceStep(level=i, pivot_u=a, pivot_v=b, estimate=to_input_units(d)) for i, a, b, d in steps]
        return QueryResult(
            u=u,
            v=v,
            estimate=to_input_units(internal),
            levels_used=max(step.level for step in trace),
            fallback=fallback,
            trace=trace,
        )

    def query_dist(self, u: int, v: int) -> QueryResult:
        result = self.query_with_trace(u, v)
        return result.model_copy(update={"trace": []})

    @property
    def stretch_ceiling(self) -> float:
        return 2 * math.pow(236145, self.h.k - 1)
