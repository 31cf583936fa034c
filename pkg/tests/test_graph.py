"""Sliding-window multigraph store."""
from __future__ import annotations

import io
from random import Random

import pytest

from dgquery.errors import LabelConflictError, ParseError, StreamOrderError
from dgquery.graph import (
    DynamicGraph,
    RawEdge,
    format_edge_line,
    parse_edge_line,
    read_edge_stream,
)

from conftest import raw


def test_add_edge_assigns_increasing_ids():
    g = DynamicGraph()
    r0 = g.add_edge(raw(0, "a", "e", "b"))
    r1 = g.add_edge(raw(0, "b", "e", "c"))
    r2 = g.add_edge(raw(3, "a", "f", "c"))
    assert (r0.edge_id, r1.edge_id, r2.edge_id) == (0, 1, 2)
    assert g.edges_ingested == 3
    assert g.edge_count == 3
    assert g.vertex_count == 3


def test_window_eviction_boundary():
    # retained iff timestamp > t_last - window: an edge exactly one full
    # window old is gone, one tick younger survives
    g = DynamicGraph(window=5)
    g.add_edge(raw(0, "a", "e", "b"))
    g.add_edge(raw(4, "c", "e", "d"))
    assert g.edge_count == 2
    g.add_edge(raw(5, "c", "e", "a"))  # cutoff 0: evicts the ts=0 edge
    assert g.edge_count == 2
    assert not g.has_vertex("b")
    assert g.has_vertex("a")  # resurrected by the new edge
    g.add_edge(raw(10, "x", "e", "y"))  # cutoff 5: evicts ts=4 and ts=5
    assert g.edge_count == 1
    assert g.edges_evicted == 3


def test_unbounded_window_keeps_everything():
    g = DynamicGraph(window=None)
    for i in range(100):
        g.add_edge(raw(i * 10, f"v{i}", "e", f"v{i + 1}"))
    assert g.edge_count == 100
    assert g.evict_expired() == []


def test_bad_window_rejected():
    with pytest.raises(ValueError):
        DynamicGraph(window=0)
    with pytest.raises(ValueError):
        DynamicGraph(window=-3)


def test_stream_order_enforced():
    g = DynamicGraph()
    g.add_edge(raw(5, "a", "e", "b"))
    g.add_edge(raw(5, "b", "e", "c"))  # ties are fine
    with pytest.raises(StreamOrderError):
        g.add_edge(raw(4, "c", "e", "d"))


def test_label_conflict_detected_and_cleared_by_eviction():
    g = DynamicGraph(window=2)
    g.add_edge(raw(0, "a", "e", "b"))
    with pytest.raises(LabelConflictError):
        g.add_edge(raw(1, "a", "e", "c", src_type="B"))
    # after 'a' has no live edges it may return under a new label
    g.add_edge(raw(10, "x", "e", "y"))
    assert not g.has_vertex("a")
    g.add_edge(raw(11, "a", "e", "x", src_type="B"))
    assert g.vertex_label("a") == "B"


def test_vertices_live_only_while_touched():
    g = DynamicGraph(window=3)
    g.add_edge(raw(0, "a", "e", "b"))
    assert sorted(v for v, _ in g.vertices()) == ["a", "b"]
    g.add_edge(raw(10, "c", "e", "c"))
    assert sorted(v for v, _ in g.vertices()) == ["c"]
    assert g.vertex_label("c") == "A"


def test_neighbors_direction_and_label_filters():
    g = DynamicGraph()
    g.add_edge(raw(0, "a", "e", "b"))
    g.add_edge(raw(0, "b", "e", "a"))
    g.add_edge(raw(0, "a", "f", "b"))
    outs = [r.edge_id for r in g.neighbors("a", "out")]
    ins = [r.edge_id for r in g.neighbors("a", "in")]
    any_ = [r.edge_id for r in g.neighbors("a", "any")]
    assert outs == [0, 2]
    assert ins == [1]
    assert any_ == [0, 2, 1]
    assert [r.edge_id for r in g.neighbors("a", "out", "f")] == [2]
    assert list(g.neighbors("missing", "any")) == []
    with pytest.raises(ValueError):
        list(g.neighbors("a", "sideways"))


def test_self_loop_reported_once_and_counted_once():
    g = DynamicGraph()
    g.add_edge(raw(0, "a", "e", "a"))
    g.add_edge(raw(0, "a", "e", "b"))
    ids = [r.edge_id for r in g.neighbors("a", "any")]
    assert ids == [0, 1]  # the loop shows up once
    assert [r.edge_id for r in g.neighbors("a", "in")] == [0]
    stats = g.degree_stats()
    # a: loop (1) + out edge (1) = 2; b: 1
    assert stats.mean_degree == pytest.approx(1.5)
    assert stats.mean_degree_by_label == {"A": pytest.approx(1.5)}


def test_parallel_edges_are_distinct_records():
    g = DynamicGraph()
    g.add_edge(raw(0, "a", "e", "b"))
    g.add_edge(raw(1, "a", "e", "b"))
    assert [r.edge_id for r in g.neighbors("a", "out", "e")] == [0, 1]


def test_degree_stats_by_label():
    g = DynamicGraph()
    g.add_edge(raw(0, "u1", "posted", "p1", src_type="user", dst_type="post"))
    g.add_edge(raw(0, "u1", "posted", "p2", src_type="user", dst_type="post"))
    g.add_edge(raw(0, "u2", "likes", "p1", src_type="user", dst_type="post"))
    stats = g.degree_stats()
    # u1:2 u2:1 p1:2 p2:1
    assert stats.mean_degree == pytest.approx(1.5)
    assert stats.mean_degree_by_label["user"] == pytest.approx(1.5)
    assert stats.mean_degree_by_label["post"] == pytest.approx(1.5)


def test_empty_graph_degree_stats():
    stats = DynamicGraph().degree_stats()
    assert stats.mean_degree == 0.0
    assert stats.mean_degree_by_label == {}


def test_window_invariant_randomized():
    # after every ingest, exactly the edges younger than one window survive
    rng = Random(11)
    g = DynamicGraph(window=7)
    ts = 0
    alive: list[tuple[int, int]] = []  # (edge_id, timestamp)
    next_id = 0
    for _ in range(400):
        ts += rng.choice((0, 0, 1, 1, 2, 5))
        v1, v2 = f"v{rng.randrange(12)}", f"v{rng.randrange(12)}"
        g.add_edge(raw(ts, v1, rng.choice("ef"), v2))
        alive.append((next_id, ts))
        next_id += 1
        alive = [(i, t) for i, t in alive if t > ts - 7]
        assert [r.edge_id for r in g.live_edges()] == [i for i, _ in alive]


# ---------------------------------------------------------------------- wire

def test_edge_line_round_trip():
    e = raw(42, "a", "e", "b", src_type="T1", dst_type="T2")
    assert parse_edge_line(format_edge_line(e)) == e


def test_edge_line_skips_comments_and_blanks():
    assert parse_edge_line("# comment") is None
    assert parse_edge_line("   ") is None
    assert parse_edge_line("") is None


@pytest.mark.parametrize(
    "line",
    [
        "1\ta\tA\te\tb",  # five fields
        "1\ta\tA\te\tb\tB\textra",
        "x\ta\tA\te\tb\tB",  # bad timestamp
        "-1\ta\tA\te\tb\tB",  # negative timestamp
        "1\t\tA\te\tb\tB",  # empty field
    ],
)
def test_edge_line_errors(line):
    with pytest.raises(ParseError):
        parse_edge_line(line, line_no=3, source="s.tsv")


def test_edge_line_error_carries_position():
    with pytest.raises(ParseError) as ei:
        parse_edge_line("nope", line_no=7, source="s.tsv")
    assert "s.tsv" in str(ei.value)
    assert "line 7" in str(ei.value)


def test_read_edge_stream():
    text = "# header\n0\ta\tA\te\tb\tB\n\n1\tb\tB\tf\tc\tC\n"
    got = list(read_edge_stream(io.StringIO(text)))
    assert got == [
        RawEdge(0, "a", "A", "e", "b", "B"),
        RawEdge(1, "b", "B", "f", "c", "C"),
    ]


def test_read_edge_stream_reports_line():
    with pytest.raises(ParseError) as ei:
        list(read_edge_stream(["0\ta\tA\te\tb\tB\n", "broken\n"], source="x"))
    assert "line 2" in str(ei.value)
