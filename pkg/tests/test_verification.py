import pytest

from functions.hierarchy import Hierarchy
from functions.oracle import Oracle
from functions.streams import generate
from functions.verification import (
    ShadowHistory,
    brute_force_dist,
    check_edge_presence,
    materialize_level,
    measure_stretch,
    mpd_change_limit,
    pivot_change_limit,
    run_invariant_suite,
)
from storage.graph import INFINITE, IncrementalMultigraph

from conftest import build


def test_brute_force_examples():
    g = IncrementalMultigraph(range(4))
    g.insert_edge_raw(0, 1, 2)
    g.insert_edge_raw(1, 2, 2)
    g.insert_edge_raw(0, 2, 10)
    assert brute_force_dist(g, 3, 3) == 0
    assert brute_force_dist(g, 0, 2) == 4
    assert brute_force_dist(g, 0, 3) == INFINITE


def test_materialize_first_level_equals_g(two_vertex):
    h, _ = two_vertex
    snap = materialize_level(h, 1)
    assert snap.vertices == h.graph.vertices
    assert [(e.u, e.v, e.weight) for e in snap.edges] == [(e.u, e.v, e.weight) for e in h.graph.edges]
    assert snap is not h.graph
    with pytest.raises(ValueError):
        materialize_level(h, h.k + 1)


def test_level_sizes_shrink_with_formula_budget():
    inserts = [(i, (i + 1) % 40, 1) for i in range(40)] + [(i, (i * 13) % 40, 3) for i in range(40)]
    h, _ = build(40, 4, inserts)
    for p in h.params[:-1]:
        assert len(h.graphs[p.i + 1]) <= len(h.graphs[p.i]) / p.b


def test_empty_graph_passes(settings):
    h = Hierarchy(5, 3)
    report = run_invariant_suite(h, depth="full", settings=settings)
    assert report.passed
    assert report.stage == 0


def test_full_suite_on_small_stream(settings):
    inserts = [(i, (i * 5 + 1) % 30, 1 + i % 7) for i in range(30)] + [(i, i + 1, 2) for i in range(29)]
    h = Hierarchy(30, 8, ball_budget=3)
    shadow = ShadowHistory(settings.full_max_stages)
    shadow.record(h)
    for u, v, w in inserts:
        h.insert(u, v, w)
        shadow.record(h)
    report = run_invariant_suite(h, "full", shadow, settings)
    assert report.passed, report.failures()
    enforced = {r.name for r in report.results if r.enforced}
    assert {"sandwich_lower", "ball_exactness", "query_soundness", "mpd_shadow", "edge_lower_bound"} <= enforced
    assert {"sandwich_upper", "sandwich_upper_h", "level_ratio_ceiling"} <= enforced
    assert {
        "pivot_distance_fact",
        "pivot_change_bound",
        "mpd_change_bound",
        "ball_edge_presence",
        "history_edge_presence",
        "connector_edge_presence",
        "projected_edge_presence",
    } <= enforced
    assert "level_ratio_3629" in {r.name for r in report.results if not r.enforced}


def test_corrupted_edge_breaks_lower_bound(settings):
    # pairs first, so every even vertex reaches level 2 before the path closes
    inserts = [(2 * i, 2 * i + 1, 5) for i in range(10)] + [(2 * i + 1, 2 * i + 2, 5) for i in range(9)]
    h, _ = build(20, 5, inserts, ball_budget=2)
    assert {0, 18} <= h.graphs[2].vertices
    h.graphs[2].insert_edge_raw(0, 18, 2)
    report = run_invariant_suite(h, depth="full", settings=settings)
    failed = {r.name: r for r in report.failures()}
    assert "edge_lower_bound" in failed
    assert "(0, 18)" in failed["edge_lower_bound"].counterexample


def test_cheap_depth_is_used_above_full_limit(settings):
    capped = settings.model_copy(update={"full_max_n": 3})
    h = Hierarchy(5, 3)
    assert run_invariant_suite(h, depth="full", settings=capped).depth == "cheap"


def test_stretch_of_single_edge():
    h, oracle = build(2, 10, [(0, 1, 3)])
    worst, mean = measure_stretch(h, oracle, 8, seed=1)
    assert 1 <= worst < 2
    assert mean <= worst


def test_stretch_without_pairs():
    h = Hierarchy(3, 2)
    assert measure_stretch(h, Oracle(h), 4, seed=0) == (0.0, 0.0)


def test_stretch_is_deterministic():
    inserts = [(i, (i * 3 + 1) % 12, 1 + i % 4) for i in range(12)]
    h, oracle = build(12, 4, inserts, ball_budget=2)
    first = measure_stretch(h, oracle, 20, seed=5)
    assert first == measure_stretch(h, oracle, 20, seed=5)
    assert first[0] >= 1


def test_cheap_depth_skips_full_only_checks(settings):
    h, _ = build(6, 4, [(0, 1, 2), (1, 2, 3)], ball_budget=2)
    names = {r.name for r in run_invariant_suite(h, depth="cheap", settings=settings).results}
    assert "sandwich_upper" in names
    assert "pivot_change_bound" not in names
    assert "ball_edge_presence" not in names


def test_sandwich_upper_after_each_insert(settings):
    # pivot distances must track vertices that join the next level inside an existing ball
    stream = generate("random-incremental", 10, 14, 8, seed=1)
    for budget in (2, 3, 5):
        h = Hierarchy(stream.n, stream.W, ball_budget=budget)
        for r in stream.records:
            h.insert(r.u, r.v, r.w)
            report = run_invariant_suite(h, depth="full", settings=settings)
            results = {r.name: r for r in report.results}
            for name in ("sandwich_lower", "sandwich_upper", "sandwich_upper_h", "ball_edge_presence"):
                assert results[name].passed, (budget, h.stage, results[name].counterexample)


def test_suite_leaves_caller_counters_alone(settings):
    h, oracle = build(8, 4, [(i, i + 1, 1 + i % 3) for i in range(7)], ball_budget=2)
    oracle.query_dist(0, 7)
    before = (oracle.queries, oracle.fallbacks)
    report = run_invariant_suite(h, depth="full", settings=settings)
    assert report.passed, report.failures()
    assert before[0] == 1
    assert (oracle.queries, oracle.fallbacks) == before


def test_change_limits():
    assert pivot_change_limit(2) == 1
    assert pivot_change_limit(32) == 10
    assert mpd_change_limit(1, 16) == 5
    assert mpd_change_limit(2, 24) == 7


def test_ball_edge_presence():
    h = Hierarchy(3, 4)
    state = h.pivots[1]
    state.pivot.update({0: 1, 2: 2})
    state.pivot_dist.update({0: 4, 2: 4})
    state.ball[0] = {0: 0, 2: 2}
    results = {r.name: r for r in check_edge_presence(h)}
    assert not results["ball_edge_presence"].passed
    assert "(1, 2)" in results["ball_edge_presence"].counterexample
    g = h.graphs[2]
    g.add_vertex(1)
    g.add_vertex(2)
    g.insert_edge_raw(1, 2, 8 * 4)
    assert all(r.passed for r in check_edge_presence(h))


def test_history_edge_presence():
    h = Hierarchy(3, 4)
    h.pivots[1].history[0] = [(1, 1, 6), (2, 2, 3)]
    results = {r.name: r for r in check_edge_presence(h)}
    assert results["history_edge_presence"].checked == 1
    assert not results["history_edge_presence"].passed
    g = h.graphs[2]
    g.add_vertex(1)
    g.add_vertex(2)
    g.insert_edge_raw(1, 2, 8 * 8)
    assert all(r.passed for r in check_edge_presence(h))
