"""Shared helpers for the test suite.

Everything here is deterministic: randomized tests take an explicit seed and
build their own ``random.Random``.
"""
from __future__ import annotations

from random import Random

import pytest

from dgquery.baseline import DeltaOracle, RescanEngine
from dgquery.engine import Engine
from dgquery.graph import DynamicGraph, RawEdge
from dgquery.planner import plan_query
from dgquery.query import QueryGraph, parse_query
from dgquery.stats import SelectivityTable, collect_stats


def q(text: str) -> QueryGraph:
    """Parse a query from inline text."""
    return parse_query(text)


def path_query(edge_labels: list[str], vertex_label: str = "ip") -> QueryGraph:
    """n-edge directed path v0 -> v1 -> ... -> vn."""
    lines = [f"node {i} {vertex_label}" for i in range(len(edge_labels) + 1)]
    lines += [
        f"edge {i} {i} {i + 1} {label}" for i, label in enumerate(edge_labels)
    ]
    return parse_query("\n".join(lines))


def raw(
    ts: int,
    src: str,
    edge_type: str,
    dst: str,
    src_type: str = "A",
    dst_type: str = "A",
) -> RawEdge:
    """RawEdge with the label fields defaulted, in a readable argument order."""
    return RawEdge(ts, src, src_type, edge_type, dst, dst_type)


def signatures(matches) -> set[tuple[tuple[int, int], ...]]:
    return {m.pairs for m in matches}


def table_for(records, hook=None) -> SelectivityTable:
    return collect_stats(records, hook)


def engines_for(query, records, window, *, lazy_only: bool = False):
    """Fresh (name, engine) pairs for every strategy, planned from ``records``."""
    table = collect_stats(records)
    single = plan_query(query, table, mode="single")
    path = plan_query(query, table, mode="path")
    out = [
        ("singlelazy", Engine(query, single.tree, window, lazy=True)),
        ("pathlazy", Engine(query, path.tree, window, lazy=True)),
    ]
    if not lazy_only:
        table2 = collect_stats(records)
        single2 = plan_query(query, table2, mode="single")
        path2 = plan_query(query, table2, mode="path")
        out += [
            ("single", Engine(query, single2.tree, window)),
            ("path", Engine(query, path2.tree, window)),
        ]
    return out


def cross_check(query, records, window, *, with_vf2: bool = True) -> dict[str, int]:
    """Run every engine step-for-step against the brute-force delta oracle.

    Returns per-strategy ``match_calls`` counters so callers can also compare
    search effort.  Raises AssertionError on the first per-step disagreement.
    """
    engines = engines_for(query, records, window)
    if with_vf2:
        engines.append(("vf2", RescanEngine(query, window)))
    oracle = DeltaOracle(query)
    shadow = DynamicGraph(window)
    for step, r in enumerate(records):
        rec = shadow.add_edge(r)
        expected = oracle.step(shadow, rec)
        for name, eng in engines:
            got = signatures(eng.process(r))
            assert got == expected, (
                f"{name} disagrees with the oracle at step {step}: "
                f"missing={expected - got} extra={got - expected}"
            )
    calls: dict[str, int] = {}
    for name, eng in engines:
        if hasattr(eng, "counters") and hasattr(eng.counters, "match_calls"):
            calls[name] = eng.counters.match_calls
    return calls


@pytest.fixture
def rng() -> Random:
    return Random(0xD6)
