from typing import List, Optional, Tuple

import networkx as nx
import pytest
from hypothesis import strategies as st

from functions.hierarchy import Hierarchy
from functions.oracle import Oracle
from storage.settings import OracleSettings


Insert = Tuple[int, int, int]


@st.composite
def insert_streams(draw: st.DrawFn, max_n: int = 12, max_m: int = 30, max_w: int = 16) -> Tuple[int, int, List[Insert]]:
    n = draw(st.integers(min_value=2, max_value=max_n))
    W = draw(st.integers(min_value=1, max_value=max_w))
    edge = st.tuples(
        st.integers(min_value=0, max_value=n - 1),
        st.integers(min_value=0, max_value=n - 1),
        st.integers(min_value=1, max_value=W),
    )
    inserts = draw(st.lists(edge, max_size=max_m))
    return n, W, inserts


def exact_distances(h: Hierarchy) -> dict:
    """All-pairs distances of G in input units."""
    g = nx.Graph()
    g.add_nodes_from(range(h.n))
    for (a, b), e in h.graph.lightest_edges().items():
        g.add_edge(a, b, weight=e.weight // 2)
    return dict(nx.all_pairs_dijkstra_path_length(g, weight="weight"))


def build(n: int, W: int, inserts: List[Insert], ball_budget: Optional[int] = None) -> Tuple[Hierarchy, Oracle]:
    h = Hierarchy(n, W, ball_budget)
    for u, v, w in inserts:
        h.insert(u, v, w)
    return h, Oracle(h)


@pytest.fixture
def settings() -> OracleSettings:
    return OracleSettings(verify_workers=2)


@pytest.fixture
def two_vertex() -> Tuple[Hierarchy, Oracle]:
    return build(2, 10, [(0, 1, 4)])
