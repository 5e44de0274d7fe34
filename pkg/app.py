import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, TextIO

from storage.settings import OracleSettings, configure_logging, load_settings
from functions.bench import bench
from functions.hierarchy import Hierarchy
from functions.metrics import collect_metrics
from functions.oracle import Oracle
from functions.streams import KINDS, StreamParseError, generate, parse_stream, serialize_stream
from functions.verification import ShadowHistory, measure_stretch, run_invariant_suite


logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
STRETCH_SAMPLES = 64


def run_stream(
    path: str,
    strict: bool = False,
    depth: str = "cheap",
    metrics_path: Optional[str] = None,
    seed: int = 0,
    settings: Optional[OracleSettings] = None,
    out: Optional[TextIO] = None,
) -> int:
    settings = settings or load_settings()
    out = out or sys.stdout
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        return EXIT_PARSE
    try:
        stream = parse_stream(text)
    except StreamParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE

    h: Optional[Hierarchy] = None
    oracle: Optional[Oracle] = None
    shadow: Optional[ShadowHistory] = None
    if stream.n:
        h = Hierarchy(stream.n, stream.W, settings.ball_budget)
        oracle = Oracle(h)
        if depth == "full" and stream.n <= settings.full_max_n:
            shadow = ShadowHistory(settings.full_max_stages)
            shadow.record(h)

    failed = False
    for record in stream.records:
        if record.op == "insert":
            h.insert(record.u, record.v, record.w)
            if shadow is not None:
                shadow.record(h)
        elif record.op == "query":
            print(oracle.query_dist(record.u, record.v).line(), file=out)
        else:
            report = run_invariant_suite(h, depth, shadow, settings, seed)
            print(report.model_dump_json(), file=out)
            failed = failed or not report.passed

    metrics = collect_metrics(h, oracle)
    if h is not None and h.stage:
        metrics.max_stretch, metrics.mean_stretch = measure_stretch(h, oracle, STRETCH_SAMPLES, seed)
    if metrics_path:
        Path(metrics_path).write_text(metrics.model_dump_json(indent=2))
    if strict and failed:
        logger.warning("invariant failure under --strict")
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description="Incremental distance oracle harness")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="apply an update stream")
    run.add_argument("stream")
    run.add_argument("--strict", action="store_true", help="exit 3 on any failed invariant")
    run.add_argument("--check-depth", choices=["cheap", "full"], default="cheap")
    run.add_argument("--metrics", default=None, help="write the final metrics JSON here")
    run.add_argument("--seed", type=int, default=0)

    gen = sub.add_parser("generate", help="write a synthetic update stream")
    gen.add_argument("kind", choices=KINDS)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, default=0)
    gen.add_argument("--W", type=int, default=1024)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--query-rate", type=float, default=0.0)
    gen.add_argument("--out", default=None)

    b = sub.add_parser("bench", help="time insert streams of growing size")
    b.add_argument("--suite", choices=KINDS, default="random-incremental")
    b.add_argument("--sizes", type=int, nargs="+", default=[2 ** 14, 2 ** 16, 2 ** 18])
    b.add_argument("--repetitions", type=int, default=3)
    b.add_argument("--out", default=None)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = load_settings()
    configure_logging(settings.log_level)

    if args.command == "run":
        return run_stream(args.stream, args.strict, args.check_depth, args.metrics, args.seed, settings)

    if args.command == "generate":
        try:
            stream = generate(args.kind, args.n, args.m, args.W, args.seed, args.query_rate)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_PARSE
        text = serialize_stream(stream)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    if args.out:
        with open(args.out, "w", newline="") as fp:
            bench(args.suite, args.sizes, args.repetitions, fp, settings.ball_budget)
    else:
        bench(args.suite, args.sizes, args.repetitions, None, settings.ball_budget)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
