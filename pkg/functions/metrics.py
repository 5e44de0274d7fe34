from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from functions.hierarchy import Hierarchy
from functions.oracle import Oracle


class LevelMetrics(BaseModel):
    level: int
    vertices: int = 0
    edges: int = 0
    edges_by_kind: Dict[str, int] = Field(default_factory=dict)
    pivot_changes: int = 0
    mpd_changes: int = 0
    trunc_dijkstra_calls: int = 0
    bhat: int = 0


class MetricsSnapshot(BaseModel):
    n: int = 0
    W: int = 0
    k: int = 0
    stages: int = 0
    update_seconds: float = 0.0
    queries: int = 0
    query_fallbacks: int = 0
    levels: List[LevelMetrics] = Field(default_factory=list)
    max_stretch: Optional[float] = None
    mean_stretch: Optional[float] = None


def collect_metrics(h: Optional[Hierarchy], oracle: Optional[Oracle] = None) -> MetricsSnapshot:
    if h is None:
        return MetricsSnapshot()
    return MetricsSnapshot(
        n=h.n,
        W=h.W,
        k=h.k,
        stages=h.stage,
        update_seconds=h.update_seconds,
        queries=oracle.queries if oracle else 0,
        query_fallbacks=oracle.fallbacks if oracle else 0,
        levels=[LevelMetrics(**row) for row in h.snapshot()],
    )
