from functions.edge_generator import EdgeGenerator, EdgeKind, EdgeRecord
from functions.hierarchy_forest import HierarchyForest, ImprovingEvent
from functions.level_pivots import LevelParams, LevelPivotState
from storage.graph import IncrementalMultigraph


def pivot_state(vertices, level=1):
    params = LevelParams(i=level, b=2.0, bhat=8, k=4, n=10, W=64)
    graph = IncrementalMultigraph(vertices, prefix_width=8)
    state = LevelPivotState(params, graph)
    for v in vertices:
        state.add_vertex(v)
    return state


def test_ball_edges_drop_self_loop():
    state = pivot_state([0, 1])
    state.pivot.update({0: 7, 1: 8})
    state.pivot_dist.update({0: 8, 1: 4})
    state.ball[0] = {0: 0, 1: 2}
    records = EdgeGenerator(4).emit_ball_edges(state, 0)
    assert [(r.level, r.u, r.v, r.weight, r.kind) for r in records] == [(2, 7, 8, 64, EdgeKind.BALL)]


def test_ball_edges_lone_vertex_and_unset_pivot():
    state = pivot_state([0, 1])
    state.pivot[0] = 7
    state.pivot_dist[0] = 8
    state.ball[0] = {0: 0}
    assert EdgeGenerator(4).emit_ball_edges(state, 0) == []
    state.ball[0] = {0: 0, 1: 2}
    assert EdgeGenerator(4).emit_ball_edges(state, 0) == []


def test_ball_edge_weight_covers_far_side_pivot():
    # p(u) ~ u ~ x ~ p(x) is 8 + 2 + 38 = 48, above 5 * 8 but below 8 * 8
    state = pivot_state([0, 1])
    state.pivot.update({0: 7, 1: 9})
    state.pivot_dist.update({0: 8, 1: 38})
    state.ball[0] = {0: 0, 1: 2}
    (record,) = EdgeGenerator(4).emit_ball_edges(state, 0)
    assert record.weight == 64
    assert record.weight >= 8 + 2 + 38


def test_pivot_history_edges():
    state = pivot_state([0])
    gen = EdgeGenerator(4)
    state.history[0] = [(1, 3, 16)]
    assert gen.emit_pivot_history_edges(state, 0, 1) == []
    state.history[0].append((2, 4, 10))
    records = gen.emit_pivot_history_edges(state, 0, 2)
    assert [(r.u, r.v, r.weight) for r in records] == [(3, 4, 128)]
    state.history[0].append((5, 6, 6))
    records = gen.emit_pivot_history_edges(state, 0, 5)
    assert [(r.u, r.v) for r in records] == [(3, 6), (4, 6)]
    assert all(r.kind == EdgeKind.PIVOT_HISTORY for r in records)


def test_pivot_history_weight_ignores_minimum_from_before_joining_level():
    # vertex 5 had chain distance 4 through level 1 before it joined V(H_2);
    # once in V(H_2) its chain distance is its level-2 pivot distance
    state = pivot_state([5], level=2)
    forest = HierarchyForest(2)
    forest.add_leaf(5)
    forest.mpd[5] = 4
    state.history[5] = [(3, 10, 24), (4, 11, 12)]
    (record,) = EdgeGenerator(4).emit_pivot_history_edges(state, 5, 4)
    assert (record.level, record.u, record.v) == (3, 10, 11)
    assert record.weight == 8 * 32
    assert record.weight > 8 * forest.mpd[5]


def test_connector_weight_sums_three_terms():
    lower, upper = HierarchyForest(1), HierarchyForest(2)
    lower.improving[0] = [(5, 1, 8)]
    upper.pbar.update({0: 11, 1: 10})
    upper.mpd.update({0: 4, 1: 4})
    gen = EdgeGenerator(4)
    event = ImprovingEvent(stage=5, vertex=0, old_pivot=None, new_pivot=1, mpd=8)
    records = gen.emit_connector_edges(2, lower, upper, [event], [])
    assert [(r.level, r.u, r.v, r.weight, r.kind) for r in records] == [(3, 10, 11, 16, EdgeKind.CONNECTOR)]


def test_connector_self_loop_suppressed():
    lower, upper = HierarchyForest(1), HierarchyForest(2)
    lower.improving[0] = [(5, 1, 8)]
    upper.pbar.update({0: 10, 1: 10})
    upper.mpd.update({0: 4, 1: 4})
    event = ImprovingEvent(stage=5, vertex=0, old_pivot=None, new_pivot=1, mpd=8)
    assert EdgeGenerator(4).emit_connector_edges(2, lower, upper, [event], []) == []


def test_connector_reemitted_when_upper_mpd_halves():
    lower, upper = HierarchyForest(1), HierarchyForest(2)
    lower.improving[0] = [(5, 1, 8), (6, 2, 4)]
    upper.pbar.update({0: 11, 1: 10, 2: 12})
    upper.mpd.update({0: 2, 1: 4, 2: 0})
    gen = EdgeGenerator(4)
    event = ImprovingEvent(stage=9, vertex=0, old_pivot=13, new_pivot=11, mpd=2)
    records = gen.emit_connector_edges(2, lower, upper, [], [event])
    assert sorted((r.u, r.v, r.weight) for r in records) == [(10, 11, 4 + 8 + 2), (12, 11, 0 + 4 + 2)]


def projection_forest():
    forest = HierarchyForest(1)
    forest.pbar.update({0: 20, 1: 21, 2: 22, 3: 23})
    forest.mpd.update({0: 2, 1: 0, 2: 0, 3: 0})
    return forest


def test_new_base_edge_projected_immediately():
    gen = EdgeGenerator(4)
    gen.begin_stage()
    gen.register_base(1, 0, 1, 6)
    (record,) = gen.emit_projected_edges(1, projection_forest(), [])
    assert (record.level, record.u, record.v, record.weight) == (2, 20, 21, 2 + 8 + 0)


def test_zero_mpd_projection_keeps_weight():
    forest = HierarchyForest(1)
    forest.pbar.update({0: 0, 1: 1})
    forest.mpd.update({0: 0, 1: 0})
    gen = EdgeGenerator(4)
    gen.register_base(1, 0, 1, 4)
    (record,) = gen.emit_projected_edges(1, forest, [])
    assert record.weight == 4


def test_improving_event_projects_every_incident_edge():
    gen = EdgeGenerator(4)
    for y in (1, 2, 3):
        gen.register_base(1, 0, y, 4)
    gen.begin_stage()
    event = ImprovingEvent(stage=3, vertex=0, old_pivot=None, new_pivot=20, mpd=2)
    records = gen.emit_projected_edges(1, projection_forest(), [event])
    assert len(records) == 3
    assert all(r.kind == EdgeKind.PROJECTED for r in records)


def test_base_edges_above_level_not_projected():
    gen = EdgeGenerator(4)
    gen.register_base(2, 0, 1, 4)
    assert gen.emit_projected_edges(1, projection_forest(), []) == []


def test_apply_pending_dedups_and_retains():
    gen = EdgeGenerator(3)
    graph = IncrementalMultigraph([0, 1], prefix_width=4)
    graph.stage = 1
    assert gen.apply_pending(2, graph) == set()
    same = EdgeRecord(2, 0, 1, 8, EdgeKind.BALL)
    gen.pending[2] = [same, same, EdgeRecord(2, 1, 0, 8, EdgeKind.PROJECTED), EdgeRecord(2, 0, 5, 8, EdgeKind.BALL)]
    touched = gen.apply_pending(2, graph)
    assert touched == {0, 1}
    assert len(graph.edges) == 1
    assert gen.counts[2]["ball"] == 1
    assert gen.pending[2] == [EdgeRecord(2, 0, 5, 8, EdgeKind.BALL)]
    assert len(gen.base) == 1
