"""Benchmark harness: run one stream under several strategies and compare.

Every strategy must emit the same set of match signatures; a disagreement is
a :class:`MismatchError`, which the command line surfaces as its own exit
code.  Timing uses ``time.perf_counter`` around the ingest loop only (graph
and tree construction are excluded).
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .baseline import RescanEngine
from .engine import Engine
from .errors import ContractError, MismatchError
from .graph import RawEdge
from .planner import Plan, plan_query
from .query import QueryGraph
from .stats import SelectivityTable, collect_stats

__all__ = ["STRATEGIES", "BenchReport", "run_strategy", "run_sweep", "bin_reports"]

STRATEGIES = ("single", "singlelazy", "path", "pathlazy", "vf2")

REPORT_FIELDS = (
    "strategy",
    "edges",
    "wall_ms",
    "edges_per_sec",
    "emitted",
    "match_calls",
    "peak_stored",
    "expected_selectivity",
    "relative_selectivity",
)


@dataclass
class BenchReport:
    strategy: str
    edges: int
    wall_ms: float
    edges_per_sec: float
    emitted: int
    match_calls: int | None = None
    peak_stored: int | None = None
    expected_selectivity: float | None = None
    relative_selectivity: float | None = None

    def row(self) -> list[str]:
        out: list[str] = []
        for name in REPORT_FIELDS:
            v = getattr(self, name)
            if v is None:
                out.append("-")
            elif isinstance(v, float):
                out.append(f"{v:.6g}")
            else:
                out.append(str(v))
        return out


def _plan_for(strategy: str, query: QueryGraph, table: SelectivityTable) -> Plan:
    mode = "path" if strategy.startswith("path") else "single"
    return plan_query(query, table, mode=mode)


def run_strategy(
    strategy: str,
    query: QueryGraph,
    records: Sequence[RawEdge],
    window: int | None,
    table: SelectivityTable,
) -> tuple[BenchReport, set]:
    """Run one strategy over the stream; return its report and signature set."""
    if strategy not in STRATEGIES:
        raise ContractError(f"unknown strategy {strategy!r}")
    if strategy == "vf2":
        eng = RescanEngine(query, window)
        start = time.perf_counter()
        for raw in records:
            eng.process(raw)
        wall = time.perf_counter() - start
        report = BenchReport(
            strategy=strategy,
            edges=len(records),
            wall_ms=wall * 1000.0,
            edges_per_sec=len(records) / wall if wall > 0 else float("inf"),
            emitted=eng.counters.emitted,
        )
        return report, set(eng.log.signatures)

    plan = _plan_for(strategy, query, table)
    eng = Engine(query, plan.tree, window, lazy=strategy.endswith("lazy"))
    start = time.perf_counter()
    for raw in records:
        eng.process(raw)
    wall = time.perf_counter() - start
    report = BenchReport(
        strategy=strategy,
        edges=len(records),
        wall_ms=wall * 1000.0,
        edges_per_sec=len(records) / wall if wall > 0 else float("inf"),
        emitted=eng.counters.emitted,
        match_calls=eng.counters.match_calls,
        peak_stored=eng.tree.peak_stored,
        expected_selectivity=plan.expected,
        relative_selectivity=plan.relative,
    )
    return report, set(eng.log.signatures)


def run_sweep(
    query: QueryGraph,
    records: Sequence[RawEdge],
    window: int | None,
    strategies: Iterable[str] = STRATEGIES,
    table: SelectivityTable | None = None,
    runner: Callable[..., tuple[BenchReport, set]] = run_strategy,
) -> list[BenchReport]:
    """Run several strategies and require signature-identical results."""
    if table is None:
        table = collect_stats(records)
    reports: list[BenchReport] = []
    sigs: dict[str, set] = {}
    for strategy in strategies:
        report, got = runner(strategy, query, records, window, table)
        reports.append(report)
        sigs[strategy] = got
    names = list(sigs)
    baseline = sigs[names[0]]
    for name in names[1:]:
        if sigs[name] != baseline:
            missing = len(baseline - sigs[name])
            extra = len(sigs[name] - baseline)
            raise MismatchError(
                f"strategy {name!r} disagrees with {names[0]!r}: "
                f"{missing} missing, {extra} extra matches"
            )
    return reports


def bin_reports(values: Sequence[float], bins: int) -> list[int]:
    """Assign each relative-selectivity value to a log-spaced bin index.

    Bin 0 holds the smallest values.  All-equal inputs land in the last bin.
    """
    import math

    if bins < 1:
        raise ContractError("need at least one bin")
    if not values:
        return []
    logs = [math.log10(v) if v > 0 else float("-inf") for v in values]
    finite = [x for x in logs if x != float("-inf")]
    if not finite:
        return [0 for _ in values]
    lo, hi = min(finite), max(finite)
    span = hi - lo
    out: list[int] = []
    for x in logs:
        if x == float("-inf"):
            out.append(0)
        elif span == 0:
            out.append(bins - 1)
        else:
            out.append(min(bins - 1, int((x - lo) / span * bins)))
    return out
