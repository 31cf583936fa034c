"""Command line for the streaming query engine.

Subcommands: ``gen`` (synthetic streams and queries), ``stats`` (selectivity
tables), ``plan`` (join-tree construction), ``run`` (continuous matching over
a stream), ``bench`` (strategy comparison).

Exit codes: 0 success, 1 usage error, 2 data or contract error, 3 strategy
disagreement.  The ``DGQ_SEED`` environment variable overrides any ``--seed``
flag, which helps drive reproducible sweeps from shell wrappers.
"""
from __future__ import annotations

import argparse
import os
import sys
from random import Random
from typing import Sequence

from . import bench as bench_mod
from .engine import Engine
from .errors import DgqError, MismatchError, ParseError
from .generate import SCHEMAS, generate_stream, random_query
from .graph import format_edge_line, read_edge_stream
from .planner import decomposition_advisories, plan_query
from .query import Match, format_query, parse_query
from .stats import SelectivityTable, collect_stats

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MISMATCH = 3

RUN_STRATEGIES = ("auto",) + bench_mod.STRATEGIES


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool reserves 2 for data."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_window(text: str) -> int | None:
    if text.lower() in ("inf", "none", "unbounded"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be an integer or 'inf', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("window must be >= 1")
    return value


def _seed(args: argparse.Namespace) -> int:
    env = os.environ.get("DGQ_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"DGQ_SEED must be an integer, got {env!r}")
    return args.seed


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _read_query(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_query(fh.read(), source=path)


def _read_stream(path: str):
    with open(path, encoding="utf-8") as fh:
        return list(read_edge_stream(fh, source=path))


def _schema_from_args(args: argparse.Namespace):
    factory = SCHEMAS[args.schema]
    kwargs = {}
    if args.pool is not None:
        first = {"social": "users", "kpartite": "pool", "netflow": "hosts"}[args.schema]
        kwargs[first] = args.pool
    if getattr(args, "skew", None) is not None:
        if args.schema != "netflow":
            raise ParseError("--skew is only accepted for the netflow schema")
        kwargs["skew"] = args.skew
    return factory(**kwargs)


def _format_match(seq: int, m: Match) -> str:
    pairs = ";".join(f"{qe}={eid}" for qe, eid in m.pairs)
    t_min = "-" if m.t_min is None else str(m.t_min)
    t_max = "-" if m.t_max is None else str(m.t_max)
    return f"{seq}\t{t_min}\t{t_max}\t{pairs}"


# ------------------------------------------------------------------ commands

def cmd_gen(args: argparse.Namespace) -> int:
    rng = Random(_seed(args))
    schema = _schema_from_args(args)
    out, close = _open_out(args.out)
    try:
        if args.kind == "stream":
            for raw in generate_stream(
                schema, args.edges, rng, edges_per_tick=args.edges_per_tick
            ):
                out.write(format_edge_line(raw) + "\n")
        else:
            query = random_query(schema, args.edges, rng)
            out.write(format_query(query))
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    records = _read_stream(args.stream)
    table = collect_stats(records)
    table.save(args.out)
    print(
        f"stats: {table.sample_size} edges, {len(table.arity1)} edge keys, "
        f"{len(table.arity2)} path keys -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    query = _read_query(args.query)
    table = SelectivityTable.load(args.stats)
    plan = plan_query(query, table, mode=args.mode)
    if args.mean_degree is not None:
        plan.warnings.extend(
            decomposition_advisories(plan.tree, table, args.mean_degree)
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(plan.tree.serialize())
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        fh.write(plan.sidecar_json())
    print(
        f"plan: strategy={plan.strategy} expected={plan.expected:.3g} "
        f"relative={plan.relative:.3g} -> {args.out}",
        file=sys.stderr,
    )
    for w in plan.warnings:
        print(f"plan: advisory: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    query = _read_query(args.query)
    records = _read_stream(args.stream)
    if args.stats is not None:
        table = SelectivityTable.load(args.stats)
    else:
        table = collect_stats(records)

    strategy = args.strategy
    if strategy == "auto":
        plan = plan_query(query, table, mode="auto")
        strategy = plan.strategy.lower()
    elif strategy == "vf2":
        plan = None
    else:
        plan = plan_query(
            query, table, mode="path" if strategy.startswith("path") else "single"
        )

    out, close = _open_out(args.out)
    try:
        seq = 0
        if strategy == "vf2":
            from .baseline import RescanEngine

            eng = RescanEngine(query, args.window)
            for raw in records:
                for m in eng.process(raw):
                    out.write(_format_match(seq, m) + "\n")
                    seq += 1
            emitted = eng.counters.emitted
        else:
            assert plan is not None
            eng = Engine(query, plan.tree, args.window, lazy=strategy.endswith("lazy"))
            for raw in records:
                for m in eng.process(raw):
                    out.write(_format_match(seq, m) + "\n")
                    seq += 1
            emitted = eng.counters.emitted
    finally:
        if close:
            out.close()
    print(
        f"run: strategy={strategy} edges={len(records)} emitted={emitted}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in bench_mod.STRATEGIES:
            raise ParseError(f"unknown strategy {s!r}")

    rng = Random(_seed(args))
    if args.stream is not None:
        records = _read_stream(args.stream)
    else:
        schema = _schema_from_args(args)
        records = generate_stream(
            schema, args.edges, rng, edges_per_tick=args.edges_per_tick
        )
    table = (
        SelectivityTable.load(args.stats)
        if args.stats is not None
        else collect_stats(records)
    )

    if args.query is not None:
        queries = [_read_query(args.query)]
    else:
        schema = _schema_from_args(args)
        queries = [
            random_query(schema, args.query_edges, rng) for _ in range(args.queries)
        ]

    out, close = _open_out(args.out)
    try:
        out.write("query\t" + "\t".join(bench_mod.REPORT_FIELDS) + "\n")
        all_reports: list[tuple[int, bench_mod.BenchReport]] = []
        for qi, query in enumerate(queries):
            reports = bench_mod.run_sweep(
                query, records, args.window, strategies, table
            )
            for rep in reports:
                out.write(f"{qi}\t" + "\t".join(rep.row()) + "\n")
                all_reports.append((qi, rep))
        if len(queries) > 1:
            xi = [
                rep.relative_selectivity
                for _, rep in all_reports
                if rep.relative_selectivity is not None
            ]
            if xi:
                assignment = bench_mod.bin_reports(xi, args.selectivity_bins)
                counts = [0] * args.selectivity_bins
                for b in assignment:
                    counts[b] += 1
                out.write(
                    "# selectivity bins (low to high): "
                    + " ".join(str(c) for c in counts)
                    + "\n"
                )
    finally:
        if close:
            out.close()
    return EXIT_OK


# -------------------------------------------------------------------- parser

def build_parser() -> _Parser:
    p = _Parser(prog="dgq", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", metavar="command")

    def add_seed(sp) -> None:
        sp.add_argument("--seed", type=int, default=0, help="RNG seed (DGQ_SEED overrides)")

    def add_schema(sp) -> None:
        sp.add_argument("--schema", choices=sorted(SCHEMAS), default="social")
        sp.add_argument("--pool", type=int, default=None, help="vertex pool size override")

    gen = sub.add_parser("gen", help="generate a synthetic stream or query")
    gen.add_argument("kind", choices=("stream", "query"))
    add_schema(gen)
    gen.add_argument("--edges", type=int, default=1000, help="stream length or query size")
    gen.add_argument("--edges-per-tick", type=int, default=4)
    gen.add_argument("--skew", type=float, default=None, help="netflow edge-type skew exponent")
    add_seed(gen)
    gen.add_argument("--out", default=None, help="output path (default stdout)")
    gen.set_defaults(func=cmd_gen)

    st = sub.add_parser("stats", help="collect a selectivity table from a stream")
    st.add_argument("--stream", required=True)
    st.add_argument("--out", required=True, help="JSON table path")
    st.set_defaults(func=cmd_stats)

    pl = sub.add_parser("plan", help="build a join tree for a query")
    pl.add_argument("--query", required=True)
    pl.add_argument("--stats", required=True)
    pl.add_argument("--mode", choices=("auto", "single", "path"), default="auto")
    pl.add_argument("--mean-degree", type=float, default=None,
                    help="emit decomposition advisories against this mean degree")
    pl.add_argument("--out", required=True, help="tree path; sidecar goes to <out>.json")
    pl.set_defaults(func=cmd_plan)

    rn = sub.add_parser("run", help="stream a file through the engine")
    rn.add_argument("--query", required=True)
    rn.add_argument("--stream", required=True)
    rn.add_argument("--window", type=_parse_window, default=None, help="int or 'inf'")
    rn.add_argument("--strategy", choices=RUN_STRATEGIES, default="auto")
    rn.add_argument("--stats", default=None, help="selectivity table (default: from stream)")
    rn.add_argument("--out", default=None, help="match TSV path (default stdout)")
    rn.set_defaults(func=cmd_run)

    be = sub.add_parser("bench", help="compare strategies on one workload")
    be.add_argument("--stream", default=None, help="stream file (default: generated)")
    add_schema(be)
    be.add_argument("--edges", type=int, default=5000)
    be.add_argument("--edges-per-tick", type=int, default=4)
    be.add_argument("--skew", type=float, default=None)
    be.add_argument("--query", default=None, help="query file (default: random)")
    be.add_argument("--queries", type=int, default=1, help="random query count")
    be.add_argument("--query-edges", type=int, default=3)
    be.add_argument("--window", type=_parse_window, default=None)
    be.add_argument("--strategies", default="singlelazy,vf2")
    be.add_argument("--stats", default=None)
    be.add_argument("--selectivity-bins", type=int, default=5)
    add_seed(be)
    be.add_argument("--out", default=None)
    be.set_defaults(func=cmd_bench)

    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except MismatchError as exc:
        print(f"dgq: mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except DgqError as exc:
        print(f"dgq: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"dgq: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
