import logging
from bisect import bisect_left
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Dict, Hashable, List, Optional, Set, Tuple

from storage.graph import INFINITE, ceil_pow2


logger = logging.getLogger(__name__)

Node = Tuple[int, int]  # (level j, vertex)

# leaf key while a chain has never been complete; exceeds any cumulative distance
_UNSET_KEY = 1 << 60


class ForestError(Exception):
    pass


class DynamicForest:
    """Rooted forest with signed edge weights and nearest-marked-descendant queries.

    Each node keeps a lazy heap of (distance, marked node) offers from its
    children plus its own ``best``; a change walks up through the ancestors,
    which is cheap because hierarchy forests are only k levels deep.
    """

    def __init__(self) -> None:
        self.parent: Dict[Hashable, Optional[Hashable]] = {}
        self.weight: Dict[Hashable, int] = {}
        self.children: Dict[Hashable, Set[Hashable]] = {}
        self.marked: Set[Hashable] = set()
        self.best: Dict[Hashable, Optional[Tuple[int, Hashable]]] = {}
        self._heap: Dict[Hashable, list] = {}
        self._stamp: Dict[Hashable, int] = {}

    def __contains__(self, x: object) -> bool:
        return x in self.parent

    def add_node(self, x: Hashable) -> bool:
        if x in self.parent:
            return False
        self.parent[x] = None
        self.weight[x] = 0
        self.children[x] = set()
        self.best[x] = None
        self._heap[x] = []
        self._stamp[x] = 0
        return True

    def _require(self, x: Hashable) -> None:
        if x not in self.parent:
            raise ForestError(f"unknown forest node {x!r}")

    def link(self, child: Hashable, parent: Hashable, w: int) -> None:
        self._require(child)
        self._require(parent)
        if self.parent[child] is not None:
            raise ForestError("link of a non-root node")
        if self.root(parent) == child:
            raise ForestError("link would close a cycle")
        self.parent[child] = parent
        self.weight[child] = w
        self.children[parent].add(child)
        self._offer(child)
        self._refresh_up(parent)

    def cut(self, child: Hashable) -> None:
        self._require(child)
        p = self.parent[child]
        if p is None:
            raise ForestError("cut of a root node")
        self.parent[child] = None
        self.weight[child] = 0
        self.children[p].discard(child)
        self._stamp[child] += 1
        self._refresh_up(p)

    def root(self, x: Hashable) -> Hashable:
        self._require(x)
        while self.parent[x] is not None:
            x = self.parent[x]
        return x

    def dist(self, x: Hashable) -> int:
        """Signed weight of the path from ``x`` up to its root."""
        self._require(x)
        total = 0
        while self.parent[x] is not None:
            total += self.weight[x]
            x = self.parent[x]
        return total

    def mark(self, x: Hashable) -> None:
        self._require(x)
        if x not in self.marked:
            self.marked.add(x)
            self._refresh_up(x)

    def unmark(self, x: Hashable) -> None:
        self._require(x)
        if x in self.marked:
            self.marked.discard(x)
            self._refresh_up(x)

    def find_nearest_marked(self, r: Hashable) -> Optional[Tuple[Hashable, int]]:
        self._require(r)
        best = self.best[r]
        if best is None:
            return None
        d, node = best
        return node, d

    def _offer(self, c: Hashable) -> None:
        self._stamp[c] += 1
        b = self.best[c]
        p = self.parent[c]
        if b is not None and p is not None:
            heappush(self._heap[p], (b[0] + self.weight[c], b[1], c, self._stamp[c]))

    def _compute(self, x: Hashable) -> Optional[Tuple[int, Hashable]]:
        heap = self._heap[x]
        while heap:
            _, _, c, stamp = heap[0]
            if self.parent[c] == x and self._stamp[c] == stamp:
                break
            heappop(heap)
        cand = (heap[0][0], heap[0][1]) if heap else None
        if x in self.marked:
            own = (0, x)
            if cand is None or own < cand:
                cand = own
        return cand

    def _refresh_up(self, x: Optional[Hashable]) -> None:
        while x is not None:
            new = self._compute(x)
            if new == self.best[x]:
                return
            self.best[x] = new
            self._offer(x)
            x = self.parent[x]


@dataclass(frozen=True)
class ImprovingEvent:
    stage: int
    vertex: int
    old_pivot: Optional[int]
    new_pivot: int
    mpd: int


class HierarchyForest:
    """Forest F_i: pivot chains of every vertex of G up to V(H_{i+1}).

    Node (j, v) hangs below (j+1, p_{j+1}(v)). Internal edges carry the level
    pivot distance; the leaf edge carries P_2(v) minus the improvement key of
    v, so a leaf with negative root distance is exactly one whose rounded
    running minimum must drop.
    """

    def __init__(self, i: int):
        self.level = i
        self.top = i + 1
        self.forest = DynamicForest()
        self.mpd: Dict[int, Optional[int]] = {}
        self.pbar: Dict[int, Optional[int]] = {}
        self.improving: Dict[int, List[Tuple[int, int, int]]] = {}
        self.events: List[ImprovingEvent] = []
        self.mpd_changes = 0
        self._leaf_dist: Dict[int, Optional[int]] = {}
        self._dirty: Set[Node] = set()

    def add_leaf(self, v: int) -> None:
        node = (1, v)
        if not self.forest.add_node(node):
            return
        self.mpd[v] = None
        self.pbar[v] = None
        self.improving[v] = []
        self._leaf_dist[v] = None
        self.forest.mark(node)
        self._dirty.add(node)

    def add_level_vertex(self, j: int, v: int) -> None:
        if 2 <= j <= self.top:
            self.forest.add_node((j, v))

    def key(self, v: int) -> int:
        m = self.mpd[v]
        if m is None:
            return _UNSET_KEY
        if m == 0:
            return 0
        return m // 2 + 1

    def set_pivot(self, j: int, v: int, pivot: int, dist: int) -> None:
        """Re-hang node (j, v) below (j+1, pivot); weight changes are a cut then a link."""
        if j > self.level:
            return
        node = (j, v)
        if self.forest.parent[node] is not None:
            self.forest.cut(node)
        if j == 1:
            self._leaf_dist[v] = dist
            w = dist - self.key(v)
        else:
            w = dist
        self.forest.link(node, (j + 1, pivot), w)
        self._dirty.add(node)

    def cumulative(self, v: int) -> float:
        """Sum of level pivot distances along the chain of v, or infinity if it is incomplete."""
        leaf = (1, v)
        root = self.forest.root(leaf)
        if root[0] != self.top:
            return INFINITE
        return self.forest.dist(leaf) + self.key(v)

    def chain_root(self, v: int) -> Optional[int]:
        root = self.forest.root((1, v))
        return root[1] if root[0] == self.top else None

    def refresh_min_pivot_dists(self, stage: int) -> List[ImprovingEvent]:
        roots = sorted({self.forest.root(x) for x in self._dirty})
        self._dirty = set()
        found: List[ImprovingEvent] = []
        for r in roots:
            if r[0] != self.top:
                continue  # chains that do not reach V(H_{i+1}) yet
            while True:
                hit = self.forest.find_nearest_marked(r)
                if hit is None or hit[1] >= 0:
                    break
                leaf, d = hit
                v = leaf[1]
                cum = d + self.key(v)
                new_mpd = ceil_pow2(cum)
                old = self.pbar[v]
                self.mpd[v] = new_mpd
                self.pbar[v] = r[1]
                self.improving[v].append((stage, r[1], new_mpd))
                self.mpd_changes += 1
                found.append(ImprovingEvent(stage, v, old, r[1], new_mpd))
                parent = self.forest.parent[leaf]
                self.forest.cut(leaf)
                self.forest.link(leaf, parent, self._leaf_dist[v] - self.key(v))
                logger.debug("level %d stage %d: mpd of %d drops to %d", self.top, stage, v, new_mpd)
        found.sort(key=lambda e: e.vertex)
        self.events.extend(found)
        return found

    def improving_pivot_events(self, since: int) -> List[ImprovingEvent]:
        # events are appended in stage order
        return self.events[bisect_left(self.events, since, key=lambda e: e.stage):]
