from typing import Dict


class UnionFind:
    """Incremental connectivity over the vertices of G.

    Union by rank with path halving; components only ever merge.
    """

    def __init__(self, n: int = 0):
        self.parent: Dict[int, int] = {v: v for v in range(n)}
        self.rank: Dict[int, int] = {v: 0 for v in range(n)}
        self.components = n

    def add(self, x: int) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0
            self.components += 1

    def find(self, x: int) -> int:
        if x not in self.parent:
            self.add(x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        px = self.find(x)
        py = self.find(y)
        if px == py:
            return False
        if self.rank[px] < self.rank[py]:
            px, py = py, px
        self.parent[py] = px
        if self.rank[px] == self.rank[py]:
            self.rank[px] += 1
        self.components -= 1
        return True

    def connected(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)
