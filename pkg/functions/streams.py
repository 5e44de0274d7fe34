import logging
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field


logger = logging.getLogger(__name__)

KINDS = ("random-incremental", "path", "grid", "preferential")


class StreamParseError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


class InsertRecord(BaseModel):
    op: Literal["insert"] = "insert"
    u: int = Field(ge=0)
    v: int = Field(ge=0)
    w: int = Field(ge=1)


class QueryRecord(BaseModel):
    op: Literal["query"] = "query"
    u: int = Field(ge=0)
    v: int = Field(ge=0)


class CheckRecord(BaseModel):
    op: Literal["check"] = "check"


Record = Union[InsertRecord, QueryRecord, CheckRecord]


class UpdateStream(BaseModel):
    n: int = Field(ge=0)
    W: int = Field(ge=1)
    records: List[Record] = Field(default_factory=list)

    @property
    def inserts(self) -> int:
        return sum(1 for r in self.records if r.op == "insert")


def _ints(parts: List[str], count: int, line_no: int) -> List[int]:
    if len(parts) != count:
        raise StreamParseError(line_no, f"expected {count} integers, got {len(parts)}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise StreamParseError(line_no, f"not an integer in {' '.join(parts)!r}")


def parse_stream(text: str) -> UpdateStream:
    header: Optional[UpdateStream] = None
    records: List[Record] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split()
        word = word.lower()
        if header is None:
            if word != "graph":
                raise StreamParseError(line_no, "stream must start with 'graph <n> <W>'")
            n, W = _ints(rest, 2, line_no)
            if n < 1 or W < 1:
                raise StreamParseError(line_no, "n and W must be positive")
            header = UpdateStream(n=n, W=W)
            continue
        if word == "insert":
            u, v, w = _ints(rest, 3, line_no)
            _check_vertices(header, line_no, u, v)
            if not 1 <= w <= header.W:
                raise StreamParseError(line_no, f"weight {w} outside [1, {header.W}]")
            records.append(InsertRecord(u=u, v=v, w=w))
        elif word == "query":
            u, v = _ints(rest, 2, line_no)
            _check_vertices(header, line_no, u, v)
            records.append(QueryRecord(u=u, v=v))
        elif word == "check":
            if rest:
                raise StreamParseError(line_no, "check takes no arguments")
            records.append(CheckRecord())
        elif word == "graph":
            raise StreamParseError(line_no, "duplicate graph header")
        else:
            raise StreamParseError(line_no, f"unknown record {word!r}")
    if header is None:
        return UpdateStream(n=0, W=1)
    header.records = records
    return header


def _check_vertices(header: UpdateStream, line_no: int, *vs: int) -> None:
    for v in vs:
        if not 0 <= v < header.n:
            raise StreamParseError(line_no, f"vertex {v} outside [0, {header.n})")


def serialize_stream(stream: UpdateStream) -> str:
    lines = [f"graph {stream.n} {stream.W}"] if stream.n else []
    for r in stream.records:
        if r.op == "insert":
            lines.append(f"insert {r.u} {r.v} {r.w}")
        elif r.op == "query":
            lines.append(f"query {r.u} {r.v}")
        else:
            lines.append("check")
    return "\n".join(lines) + ("\n" if lines else "")


def _edges_random(rng: np.random.Generator, n: int, m: int) -> List[tuple]:
    if n < 2:
        raise ValueError("random-incremental needs n >= 2")
    if m > 2 * n * (n - 1):
        raise ValueError(f"m={m} exceeds twice the simple-graph edge count for n={n}")
    out = []
    while len(out) < m:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            out.append((u, v))
    return out


def _edges_path(n: int) -> List[tuple]:
    return [(i, i + 1) for i in range(n - 1)]


def _edges_grid(rng: np.random.Generator, n: int) -> List[tuple]:
    a = int(np.floor(np.sqrt(n)))
    if a < 1:
        raise ValueError("grid needs n >= 1")
    b = n // a
    out = []
    for r in range(a):
        for c in range(b):
            x = r * b + c
            if c + 1 < b:
                out.append((x, x + 1))
            if r + 1 < a:
                out.append((x, x + b))
    order = rng.permutation(len(out))
    return [out[j] for j in order]


def _edges_preferential(rng: np.random.Generator, n: int, m: int) -> List[tuple]:
    if n < 2:
        raise ValueError("preferential needs n >= 2")
    per_vertex = max(1, m // max(1, n - 1))
    degree = np.zeros(n, dtype=np.float64)
    out: List[tuple] = [(0, 1)]
    degree[0] = degree[1] = 1
    for t in range(2, n):
        if len(out) >= m:
            break
        weights = degree[:t] + 1.0
        picks = rng.choice(t, size=min(per_vertex, t), replace=False, p=weights / weights.sum())
        for s in sorted(int(x) for x in picks):
            out.append((t, s))
            degree[t] += 1
            degree[s] += 1
    while len(out) < m:
        # top up with degree-biased pairs once every vertex has arrived
        weights = degree + 1.0
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False, p=weights / weights.sum()))
        out.append((u, v))
        degree[u] += 1
        degree[v] += 1
    return out[:m]


def generate(kind: str, n: int, m: int, W: int, seed: int = 0, query_rate: float = 0.0) -> UpdateStream:
    """Deterministic insertion stream with queries interleaved at ``query_rate`` per insert."""
    if n < 1 or W < 1 or m < 0:
        raise ValueError("n and W must be positive and m nonnegative")
    if not 0.0 <= query_rate <= 1.0:
        raise ValueError("query rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    if kind == "random-incremental":
        pairs = _edges_random(rng, n, m)
    elif kind == "path":
        pairs = _edges_path(n)
    elif kind == "grid":
        pairs = _edges_grid(rng, n)
    elif kind == "preferential":
        pairs = _edges_preferential(rng, n, m)
    else:
        raise ValueError(f"unknown stream kind {kind!r}, expected one of {', '.join(KINDS)}")
    stream = UpdateStream(n=n, W=W)
    for u, v in pairs:
        w = 1 if kind == "path" else int(rng.integers(1, W + 1))
        stream.records.append(InsertRecord(u=u, v=v, w=w))
        if query_rate and rng.random() < query_rate:
            a, b = (int(x) for x in rng.integers(0, n, size=2))
            stream.records.append(QueryRecord(u=a, v=b))
    logger.info("generated %s stream: n=%d, %d inserts", kind, n, stream.inserts)
    return stream
