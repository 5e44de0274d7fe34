import pytest

from functions.streams import StreamParseError, generate, parse_stream, serialize_stream


def test_parse_records_and_comments():
    text = "# header follows\ngraph 3 5  # n W\ninsert 0 1 2\n\nquery 0 2\nCHECK\n"
    stream = parse_stream(text)
    assert (stream.n, stream.W) == (3, 5)
    assert [r.op for r in stream.records] == ["insert", "query", "check"]
    assert stream.inserts == 1


def test_empty_text_has_no_vertices():
    stream = parse_stream("")
    assert stream.n == 0
    assert stream.records == []
    assert serialize_stream(stream) == ""


def test_serialize_then_parse():
    stream = generate("random-incremental", 8, 20, 16, seed=3, query_rate=0.5)
    assert parse_stream(serialize_stream(stream)).model_dump() == stream.model_dump()


@pytest.mark.parametrize(
    "text,line_no",
    [
        ("insert 0 1 1\n", 1),
        ("graph 3 5\ninsert 0 3 1\n", 2),
        ("graph 3 5\n\n# c\ninsert 0 1 9\n", 4),
        ("graph 3 5\nquery 0 x\n", 2),
        ("graph 3 5\ninsert 0 1\n", 2),
        ("graph 3 5\nfoo 1 2\n", 2),
        ("graph 3 5\ngraph 3 5\n", 2),
        ("graph 3 5\ncheck now\n", 2),
        ("graph 0 5\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line_no):
    with pytest.raises(StreamParseError) as err:
        parse_stream(text)
    assert err.value.line_no == line_no
    assert str(err.value).startswith(f"line {line_no}:")


def test_path_stream():
    stream = generate("path", 5, 0, 7)
    assert [(r.u, r.v, r.w) for r in stream.records] == [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)]


def test_grid_stream_covers_lattice():
    stream = generate("grid", 9, 0, 4, seed=2)
    pairs = {(r.u, r.v) for r in stream.records}
    assert len(stream.records) == 12
    assert (0, 1) in pairs and (0, 3) in pairs and (4, 7) in pairs
    assert all(1 <= r.w <= 4 for r in stream.records)


def test_random_stream_shape():
    stream = generate("random-incremental", 5, 10, 3, seed=1)
    assert stream.inserts == 10
    assert all(r.u != r.v and 0 <= r.u < 5 and 0 <= r.v < 5 for r in stream.records)


def test_preferential_stream_shape():
    for m in (5, 40):
        stream = generate("preferential", 20, m, 8, seed=4)
        assert stream.inserts == m
        assert all(r.u != r.v for r in stream.records)


def test_query_rate_one_follows_every_insert():
    stream = generate("path", 6, 0, 2, seed=0, query_rate=1.0)
    assert [r.op for r in stream.records] == ["insert", "query"] * 5


def test_same_seed_same_text():
    a = serialize_stream(generate("preferential", 30, 60, 100, seed=9, query_rate=0.2))
    b = serialize_stream(generate("preferential", 30, 60, 100, seed=9, query_rate=0.2))
    assert a == b
    assert a != serialize_stream(generate("preferential", 30, 60, 100, seed=10, query_rate=0.2))


@pytest.mark.parametrize(
    "args",
    [
        ("random-incremental", 5, 41, 3),
        ("random-incremental", 1, 1, 3),
        ("ring", 5, 5, 3),
        ("path", 0, 0, 3),
        ("path", 5, -1, 3),
    ],
)
def test_infeasible_parameters(args):
    with pytest.raises(ValueError):
        generate(*args)


def test_query_rate_out_of_range():
    with pytest.raises(ValueError):
        generate("path", 4, 0, 2, query_rate=1.5)
