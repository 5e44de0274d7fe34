import csv
import logging
import sys
import time
from typing import Dict, List, Optional, Sequence, TextIO

import numpy as np

from functions.hierarchy import Hierarchy
from functions.oracle import Oracle
from functions.streams import generate


logger = logging.getLogger(__name__)

FIELDS = [
    "suite",
    "m",
    "n",
    "repetition",
    "inserts",
    "k",
    "total_update_s",
    "amortized_update_us",
    "query_p50_us",
    "query_p90_us",
    "query_p99_us",
    "edges_per_level",
    "amortized_ratio",
]
BENCH_W = 1024
QUERY_SAMPLES = 200


def vertices_for(suite: str, m: int) -> int:
    if suite == "path":
        return m + 1
    if suite == "grid":
        return max(4, m // 2)
    return max(2, m // 4)


def bench_once(suite: str, m: int, repetition: int, ball_budget: Optional[int] = None) -> Dict[str, object]:
    n = vertices_for(suite, m)
    stream = generate(suite, n, m, BENCH_W, seed=repetition)
    h = Hierarchy(n, BENCH_W, ball_budget)
    oracle = Oracle(h)
    for r in stream.records:
        if r.op == "insert":
            h.insert(r.u, r.v, r.w)
    rng = np.random.default_rng(repetition)
    pairs = rng.integers(0, n, size=(QUERY_SAMPLES, 2))
    latencies = []
    for u, v in pairs:
        started = time.perf_counter()
        oracle.query_dist(int(u), int(v))
        latencies.append((time.perf_counter() - started) * 1e6)
    p50, p90, p99 = np.percentile(np.asarray(latencies), [50, 90, 99])
    inserts = stream.inserts
    return {
        "suite": suite,
        "m": m,
        "n": n,
        "repetition": repetition,
        "inserts": inserts,
        "k": h.k,
        "total_update_s": round(h.update_seconds, 6),
        "amortized_update_us": round(h.update_seconds / max(1, inserts) * 1e6, 3),
        "query_p50_us": round(float(p50), 3),
        "query_p90_us": round(float(p90), 3),
        "query_p99_us": round(float(p99), 3),
        "edges_per_level": ";".join(str(len(h.graphs[i].edges)) for i in range(1, h.k + 1)),
        "amortized_ratio": "",
    }


def bench(
    suite: str,
    sizes: Sequence[int],
    repetitions: int,
    out: Optional[TextIO] = None,
    ball_budget: Optional[int] = None,
) -> List[Dict[str, object]]:
    """Times insert streams of each size; repetitions run sequentially."""
    rows: List[Dict[str, object]] = []
    previous: Optional[float] = None
    for m in sizes:
        batch = [bench_once(suite, m, rep, ball_budget) for rep in range(repetitions)]
        mean = float(np.mean([r["amortized_update_us"] for r in batch]))
        if previous:
            ratio = mean / previous
            for r in batch:
                r["amortized_ratio"] = round(ratio, 3)
            logger.info("%s m=%d: amortized update time x%.2f vs previous size", suite, m, ratio)
        previous = mean
        rows.extend(batch)
    writer = csv.DictWriter(out or sys.stdout, fieldnames=FIELDS)
    writer.writeheader()
    writer.writerows(rows)
    return rows
