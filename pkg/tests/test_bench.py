import csv
import io

from functions.bench import FIELDS, bench, vertices_for


def test_vertices_for_suites():
    assert vertices_for("path", 10) == 11
    assert vertices_for("grid", 10) == 5
    assert vertices_for("random-incremental", 4) == 2


def test_bench_writes_one_row_per_repetition():
    out = io.StringIO()
    rows = bench("path", [8, 16], 2, out, ball_budget=2)
    assert len(rows) == 4
    assert [r["inserts"] for r in rows] == [8, 8, 16, 16]
    assert rows[0]["amortized_ratio"] == ""
    assert rows[2]["amortized_ratio"] == rows[3]["amortized_ratio"] != ""

    parsed = list(csv.DictReader(io.StringIO(out.getvalue())))
    assert list(parsed[0].keys()) == FIELDS
    assert len(parsed) == 4
    for row in parsed:
        assert len(row["edges_per_level"].split(";")) == int(row["k"])
        assert float(row["query_p50_us"]) <= float(row["query_p99_us"])
