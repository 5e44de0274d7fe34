import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Set, Tuple

from storage.graph import IncrementalMultigraph, ceil_pow2
from functions.hierarchy_forest import HierarchyForest, ImprovingEvent
from functions.level_pivots import LevelPivotState, LevelStageResult


logger = logging.getLogger(__name__)


class EdgeKind(str, Enum):
    BALL = "ball"
    PIVOT_HISTORY = "pivot-history"
    CONNECTOR = "connector"
    PROJECTED = "projected"


BASE_KINDS = (EdgeKind.BALL, EdgeKind.PIVOT_HISTORY, EdgeKind.CONNECTOR)


@dataclass(frozen=True)
class EdgeRecord:
    level: int
    u: int
    v: int
    weight: int
    kind: EdgeKind
    provenance: str = ""

    @property
    def key(self) -> Tuple[int, int, int, int]:
        return (self.level, min(self.u, self.v), max(self.u, self.v), self.weight)


@dataclass(frozen=True)
class BaseEdge:
    level: int
    x: int
    y: int
    weight: int


class BaseEdgeIndex:
    """Base edges of every level (E(G) at level 1) with per-vertex incidence lists."""

    def __init__(self) -> None:
        self.edges: List[BaseEdge] = []
        self.incident: Dict[int, List[int]] = {}
        self._seen: Set[Tuple[int, int, int, int]] = set()

    def __len__(self) -> int:
        return len(self.edges)

    def register(self, level: int, x: int, y: int, weight: int) -> Optional[int]:
        key = (level, min(x, y), max(x, y), weight)
        if x == y or key in self._seen:
            return None
        self._seen.add(key)
        eid = len(self.edges)
        self.edges.append(BaseEdge(level, x, y, weight))
        self.incident.setdefault(x, []).append(eid)
        self.incident.setdefault(y, []).append(eid)
        return eid

    def incident_up_to(self, v: int, level: int) -> List[BaseEdge]:
        return [self.edges[e] for e in self.incident.get(v, ()) if self.edges[e].level <= level]


class EdgeGenerator:
    """Emits the four hierarchy edge families into H_{i+1} and applies them with dedup."""

    def __init__(self, k: int):
        self.k = k
        self.base = BaseEdgeIndex()
        self.pending: Dict[int, List[EdgeRecord]] = {j: [] for j in range(2, k + 1)}
        self._inserted: Set[Tuple[int, int, int, int]] = set()
        self._new_base: List[int] = []
        # per level i: x -> {v : x appears in the level-i improving history of v}
        self._history_owners: Dict[int, Dict[int, Set[int]]] = {}
        self.counts: Dict[int, Dict[str, int]] = {
            j: {kind.value: 0 for kind in EdgeKind} for j in range(1, k + 1)
        }
        self.emitted = 0

    def begin_stage(self) -> None:
        self._new_base = []

    def register_base(self, level: int, x: int, y: int, weight: int) -> None:
        eid = self.base.register(level, x, y, weight)
        if eid is not None:
            self._new_base.append(eid)

    def _emit(self, out: List[EdgeRecord], record: EdgeRecord) -> None:
        if record.u == record.v:
            return
        out.append(record)

    def emit_ball_edges(self, state: LevelPivotState, u: int, only: Optional[Iterable[int]] = None) -> List[EdgeRecord]:
        """Edges (p(u), p(x)) of weight 8 * ceil_pow2(P(u)) for x in the quarter-radius ball of u."""
        out: List[EdgeRecord] = []
        pu = state.pivot[u]
        if pu is None:
            return out
        cu = ceil_pow2(state.pivot_dist[u])
        ball = state.ball[u]
        targets = sorted(ball) if only is None else sorted(x for x in only if x in ball)
        for x in targets:
            px = state.pivot[x]
            if px is None:
                continue
            self._emit(out, EdgeRecord(state.level + 1, pu, px, 8 * cu, EdgeKind.BALL, f"ball {u}:{x}"))
        return out

    def emit_pivot_history_edges(self, state: LevelPivotState, v: int, stage: int) -> List[EdgeRecord]:
        out: List[EdgeRecord] = []
        entries = state.history[v]
        if not entries or entries[-1][0] != stage:
            return out
        newest = entries[-1][1]
        for t, p, snapshot in entries[:-1]:
            self._emit(
                out,
                EdgeRecord(state.level + 1, p, newest, 8 * ceil_pow2(snapshot), EdgeKind.PIVOT_HISTORY, f"history {v}@{t}"),
            )
        return out

    def _connector(self, i: int, upper: HierarchyForest, v: int, entry: Tuple[int, int, int]) -> Optional[EdgeRecord]:
        t, x, m = entry
        a, b = upper.pbar.get(x), upper.pbar.get(v)
        if a is None or b is None or a == b:
            return None
        weight = ceil_pow2(upper.mpd[x]) + ceil_pow2(m) + ceil_pow2(upper.mpd[v])
        return EdgeRecord(i + 1, a, b, weight, EdgeKind.CONNECTOR, f"connector {v}@{t}")

    def note_history(self, i: int, events: Iterable[ImprovingEvent]) -> None:
        owners = self._history_owners.setdefault(i, {})
        for e in events:
            owners.setdefault(e.new_pivot, set()).add(e.vertex)

    def emit_connector_edges(
        self,
        i: int,
        lower: HierarchyForest,
        upper: HierarchyForest,
        lower_events: List[ImprovingEvent],
        upper_events: List[ImprovingEvent],
    ) -> List[EdgeRecord]:
        """Connector edges into level i+1 for vertices whose level-i or level-(i+1) data moved."""
        work: Set[Tuple[int, int, int, int]] = set()
        for e in lower_events:
            work.add((e.vertex, e.stage, e.new_pivot, e.mpd))
        owners = self._history_owners.get(i, {})
        for e in upper_events:
            for entry in lower.improving.get(e.vertex, ()):
                work.add((e.vertex,) + entry)
            for v in owners.get(e.vertex, ()):
                for entry in lower.improving[v]:
                    if entry[1] == e.vertex:
                        work.add((v,) + entry)
        out: List[EdgeRecord] = []
        for v, t, x, m in sorted(work):
            record = self._connector(i, upper, v, (t, x, m))
            if record is not None:
                out.append(record)
        return out

    def _project(self, i: int, forest: HierarchyForest, edge: BaseEdge) -> Optional[EdgeRecord]:
        a, b = forest.pbar.get(edge.x), forest.pbar.get(edge.y)
        if a is None or b is None or a == b:
            return None
        weight = ceil_pow2(forest.mpd[edge.x]) + ceil_pow2(edge.weight) + ceil_pow2(forest.mpd[edge.y])
        return EdgeRecord(i + 1, a, b, weight, EdgeKind.PROJECTED, f"projected L{edge.level} {edge.x}-{edge.y}")

    def emit_projected_edges(self, i: int, forest: HierarchyForest, events: List[ImprovingEvent]) -> List[EdgeRecord]:
        """Projections into level i+1 of new base edges and of base edges at improved vertices."""
        ids: Set[int] = {e for e in self._new_base if self.base.edges[e].level <= i}
        for ev in events:
            for e in self.base.incident.get(ev.vertex, ()):
                if self.base.edges[e].level <= i:
                    ids.add(e)
        out: List[EdgeRecord] = []
        for e in sorted(ids):
            record = self._project(i, forest, self.base.edges[e])
            if record is not None:
                out.append(record)
        return out

    def generate(
        self,
        stage: int,
        state: LevelPivotState,
        result: LevelStageResult,
        forest: HierarchyForest,
        events: List[ImprovingEvent],
        lower: Optional[HierarchyForest] = None,
        lower_events: Optional[List[ImprovingEvent]] = None,
    ) -> int:
        """Queue every level-(i+1) edge owed after level i settled this stage."""
        i = state.level
        records: List[EdgeRecord] = []
        for u in sorted(result.recomputed):
            records.extend(self.emit_ball_edges(state, u))
        changed = set(result.changed)
        pairs: Dict[int, Set[int]] = {}
        for x in changed:
            for u in state.members.get(x, ()):
                if u not in result.recomputed:
                    pairs.setdefault(u, set()).add(x)
        for u in sorted(pairs):
            records.extend(self.emit_ball_edges(state, u, pairs[u]))
        for move in result.moved:
            records.extend(self.emit_pivot_history_edges(state, move.vertex, stage))
        if lower is not None:
            self.note_history(i, lower_events or [])
            records.extend(self.emit_connector_edges(i, lower, forest, lower_events or [], events))
        records.extend(self.emit_projected_edges(i, forest, events))
        self.pending[i + 1].extend(records)
        self.emitted += len(records)
        return len(records)

    def apply_pending(self, level: int, graph: IncrementalMultigraph) -> Set[int]:
        """Insert queued records into H_level; returns the endpoints whose prefix moved."""
        queue = self.pending.get(level, [])
        if not queue:
            return set()
        retained: List[EdgeRecord] = []
        touched: Set[int] = set()
        for record in queue:
            if record.u not in graph or record.v not in graph:
                retained.append(record)
                continue
            if record.kind in BASE_KINDS:
                self.register_base(level, record.u, record.v, record.weight)
            if record.key in self._inserted:
                continue
            self._inserted.add(record.key)
            graph.insert_edge_raw(record.u, record.v, record.weight)
            self.counts[level][record.kind.value] += 1
            for x in (record.u, record.v):
                if graph.prefix_changed_since(x, graph.stage):
                    touched.add(x)
        self.pending[level] = retained
        return touched
