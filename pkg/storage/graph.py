import math
from bisect import insort
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple


INFINITE = math.inf


class GraphError(Exception):
    pass


class UnknownVertexError(GraphError):
    pass


class WeightDomainError(GraphError):
    pass


def ceil_pow2(x: int) -> int:
    """Smallest power of two >= x; 0 stays 0."""
    if x < 0:
        raise ValueError("ceil_pow2 expects a nonnegative integer")
    if x == 0:
        return 0
    return 1 << (x - 1).bit_length()


def rounded_weight(w: int) -> int:
    if w < 1:
        raise WeightDomainError("weight below domain")
    return ceil_pow2(w)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    weight: int
    rounded: int
    arrival: int

    def other(self, x: int) -> int:
        return self.v if x == self.u else self.u


class IncrementalMultigraph:
    """Insert-only weighted multigraph holding both H_i and its rounded view.

    Adjacency per vertex is sorted by (rounded weight, arrival). Prefix queries
    take the lightest edge per distinct neighbour, so parallel copies never crowd
    a neighbour out of the first ``b`` slots.
    """

    def __init__(self, vertices: Iterable[int] = (), prefix_width: Optional[int] = None):
        self.vertices: Set[int] = set()
        self.edges: List[Edge] = []
        self.adjacency: Dict[int, List[Tuple[int, int]]] = {}
        self._lightest: Dict[int, Dict[int, Tuple[int, int]]] = {}
        self.prefix_width = prefix_width
        self.stage = 0
        self._prefix_changed_at: Dict[int, int] = {}
        self.prefix_change_count: Dict[int, int] = {}
        for v in vertices:
            self.add_vertex(v)

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: object) -> bool:
        return v in self.vertices

    def add_vertex(self, v: int) -> bool:
        if v in self.vertices:
            return False
        self.vertices.add(v)
        self.adjacency[v] = []
        self._lightest[v] = {}
        return True

    def degree(self, v: int) -> int:
        self._require(v)
        return len(self.adjacency[v])

    def _require(self, v: int) -> None:
        if v not in self.vertices:
            raise UnknownVertexError("unknown vertex")

    def insert_edge_raw(self, u: int, v: int, w: int) -> int:
        self._require(u)
        self._require(v)
        if w < 2:
            raise WeightDomainError("weight below domain")
        arrival = len(self.edges)
        edge = Edge(u, v, w, ceil_pow2(w), arrival)
        self.edges.append(edge)
        if u == v:
            # loops never shorten a path; they stay in the edge list only
            return arrival
        key = (edge.rounded, arrival)
        for x, y in ((u, v), (v, u)):
            insort(self.adjacency[x], key)
            best = self._lightest[x].get(y)
            if best is not None and best <= key:
                continue
            self._lightest[x][y] = key
            width = self.prefix_width
            if width is None or any(e.arrival == arrival for e in self.adj_prefix(x, width)):
                self._prefix_changed_at[x] = self.stage
                self.prefix_change_count[x] = self.prefix_change_count.get(x, 0) + 1
        return arrival

    def adj_prefix(self, v: int, b: int) -> List[Edge]:
        """The lightest incident edge of each of the first ``b`` distinct neighbours."""
        self._require(v)
        out: List[Edge] = []
        if b <= 0:
            return out
        seen: Set[int] = set()
        for _, arrival in self.adjacency[v]:
            edge = self.edges[arrival]
            x = edge.other(v)
            if x in seen:
                continue
            seen.add(x)
            out.append(edge)
            if len(out) >= b:
                break
        return out

    def prefix_changed_since(self, v: int, stage: int) -> bool:
        return self._prefix_changed_at.get(v, -1) >= stage

    def iter_edges(self) -> Iterator[Edge]:
        return iter(self.edges)

    def lightest_edges(self) -> Dict[Tuple[int, int], Edge]:
        """One edge per unordered endpoint pair: the one with the smallest weight."""
        best: Dict[Tuple[int, int], Edge] = {}
        for e in self.edges:
            if e.u == e.v:
                continue
            key = (min(e.u, e.v), max(e.u, e.v))
            cur = best.get(key)
            if cur is None or e.weight < cur.weight:
                best[key] = e
        return best

    def copy(self) -> "IncrementalMultigraph":
        g = IncrementalMultigraph(sorted(self.vertices), self.prefix_width)
        g.stage = self.stage
        for e in self.edges:
            g.insert_edge_raw(e.u, e.v, e.weight)
        return g
