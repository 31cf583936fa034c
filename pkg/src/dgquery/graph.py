"""Sliding-window store for a typed, directed multigraph edge stream.

The store keeps exactly the edges of the current time window: after ingesting
an edge with timestamp t, every retained edge satisfies ``timestamp > t - window``.
Vertices exist only while at least one live edge touches them.  Parallel edges
(same endpoints, same or different type) are distinct records.

Design notes
------------
- Adjacency lists are kept in arrival order, so the globally oldest live edge
  is always at the front of its endpoints' deques and eviction is O(1) per
  evicted edge.
- Timestamps must be non-decreasing across calls; ties are fine.  This is the
  property that makes front-of-deque eviction sound.
- A self-loop sits in both the out- and in-list of its vertex but is reported
  once (as an out-edge) by any-direction iteration, and counts once toward the
  vertex degree.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple

from .errors import LabelConflictError, ParseError, StreamOrderError

__all__ = [
    "RawEdge",
    "EdgeRecord",
    "DegreeStats",
    "DynamicGraph",
    "parse_edge_line",
    "format_edge_line",
    "read_edge_stream",
]


class RawEdge(NamedTuple):
    """One stream element, field order matching the TSV wire format."""

    timestamp: int
    src: str
    src_type: str
    edge_type: str
    dst: str
    dst_type: str


class EdgeRecord(NamedTuple):
    """A stored edge.  ``edge_id`` is assigned at ingest and strictly increases."""

    edge_id: int
    src: str
    dst: str
    src_type: str
    dst_type: str
    edge_type: str
    timestamp: int


@dataclass(frozen=True, slots=True)
class DegreeStats:
    mean_degree: float
    mean_degree_by_label: dict[str, float]


@dataclass(slots=True)
class _Vertex:
    label: str
    out_edges: deque = field(default_factory=deque)
    in_edges: deque = field(default_factory=deque)
    loops: int = 0

    def degree(self) -> int:
        # a self-loop appears in both deques; count it once
        return len(self.out_edges) + len(self.in_edges) - self.loops


class DynamicGraph:
    """Time-windowed dynamic multigraph.

    ``window=None`` means an unbounded window (nothing ever expires).
    """

    def __init__(self, window: int | None = None):
        if window is not None and window <= 0:
            raise ValueError("window must be positive or None")
        self.window = window
        self.t_last: int | None = None
        self.edges_ingested = 0
        self.edges_evicted = 0
        self._vertices: dict[str, _Vertex] = {}
        self._arrivals: deque = deque()  # EdgeRecords, oldest first

    # ------------------------------------------------------------------ ingest

    def add_edge(self, raw: RawEdge) -> EdgeRecord:
        """Ingest one edge, then eagerly evict everything that just expired.

        Raises StreamOrderError on a timestamp older than ``t_last`` and
        LabelConflictError when an endpoint re-appears under a new label.
        """
        ts = raw.timestamp
        if self.t_last is not None and ts < self.t_last:
            raise StreamOrderError(
                f"timestamp {ts} arrived after t_last={self.t_last}"
            )
        self._check_label(raw.src, raw.src_type)
        self._check_label(raw.dst, raw.dst_type)

        rec = EdgeRecord(
            edge_id=self.edges_ingested,
            src=raw.src,
            dst=raw.dst,
            src_type=raw.src_type,
            dst_type=raw.dst_type,
            edge_type=raw.edge_type,
            timestamp=ts,
        )
        self.edges_ingested += 1
        self.t_last = ts

        src_v = self._vertices.get(raw.src)
        if src_v is None:
            src_v = self._vertices[raw.src] = _Vertex(raw.src_type)
        dst_v = self._vertices.get(raw.dst)
        if dst_v is None:
            dst_v = self._vertices[raw.dst] = _Vertex(raw.dst_type)
        src_v.out_edges.append(rec)
        dst_v.in_edges.append(rec)
        if raw.src == raw.dst:
            src_v.loops += 1
        self._arrivals.append(rec)

        self.evict_expired()
        return rec

    def _check_label(self, vid: str, label: str) -> None:
        v = self._vertices.get(vid)
        if v is not None and v.label != label:
            raise LabelConflictError(
                f"vertex {vid!r} seen as {v.label!r}, now {label!r}"
            )

    def evict_expired(self) -> list[int]:
        """Drop every edge with ``timestamp <= t_last - window``; return their ids."""
        removed: list[int] = []
        if self.window is None or self.t_last is None:
            return removed
        cutoff = self.t_last - self.window
        arrivals = self._arrivals
        while arrivals and arrivals[0].timestamp <= cutoff:
            rec = arrivals.popleft()
            removed.append(rec.edge_id)
            src_v = self._vertices[rec.src]
            dst_v = self._vertices[rec.dst]
            popped = src_v.out_edges.popleft()
            assert popped.edge_id == rec.edge_id
            popped = dst_v.in_edges.popleft()
            assert popped.edge_id == rec.edge_id
            if rec.src == rec.dst:
                src_v.loops -= 1
            self.edges_evicted += 1
            if not src_v.out_edges and not src_v.in_edges:
                del self._vertices[rec.src]
            if rec.src != rec.dst and not dst_v.out_edges and not dst_v.in_edges:
                del self._vertices[rec.dst]
        return removed

    # ------------------------------------------------------------------ access

    @property
    def edge_count(self) -> int:
        return len(self._arrivals)

    @property
    def vertex_count(self) -> int:
        return len(self._vertices)

    def has_vertex(self, vid: str) -> bool:
        return vid in self._vertices

    def vertex_label(self, vid: str) -> str:
        return self._vertices[vid].label

    def vertices(self) -> Iterator[tuple[str, str]]:
        """Yield (vertex id, label) for every live vertex."""
        for vid, v in self._vertices.items():
            yield vid, v.label

    def live_edges(self) -> Iterator[EdgeRecord]:
        """All live edges, oldest first."""
        return iter(self._arrivals)

    def neighbors(
        self,
        vid: str,
        direction: str = "any",
        edge_type: str | None = None,
    ) -> Iterator[EdgeRecord]:
        """Live edges incident to ``vid``, each exactly once, arrival order per role.

        ``direction`` is "out", "in", or "any"; ``edge_type`` filters by label.
        Unknown vertices yield nothing.
        """
        if direction not in ("out", "in", "any"):
            raise ValueError(f"bad direction {direction!r}")
        v = self._vertices.get(vid)
        if v is None:
            return
        if direction in ("out", "any"):
            for rec in v.out_edges:
                if edge_type is None or rec.edge_type == edge_type:
                    yield rec
        if direction in ("in", "any"):
            for rec in v.in_edges:
                if direction == "any" and rec.src == rec.dst:
                    continue  # self-loop already reported from the out pass
                if edge_type is None or rec.edge_type == edge_type:
                    yield rec

    def degree_stats(self) -> DegreeStats:
        """Mean live degree, overall and per vertex label."""
        if not self._vertices:
            return DegreeStats(0.0, {})
        total = 0
        by_label: dict[str, list[int]] = {}
        for v in self._vertices.values():
            d = v.degree()
            total += d
            by_label.setdefault(v.label, []).append(d)
        return DegreeStats(
            mean_degree=total / len(self._vertices),
            mean_degree_by_label={
                lbl: sum(ds) / len(ds) for lbl, ds in sorted(by_label.items())
            },
        )


# ---------------------------------------------------------------------- wire

_FIELDS = 6


def parse_edge_line(line: str, line_no: int | None = None, source: str | None = None) -> RawEdge | None:
    """Parse one TSV stream line; returns None for comments and blank lines.

    Format: ``timestamp<TAB>src_id<TAB>src_type<TAB>edge_type<TAB>dst_id<TAB>dst_type``.
    """
    stripped = line.rstrip("\n")
    if not stripped.strip() or stripped.lstrip().startswith("#"):
        return None
    parts = stripped.split("\t")
    if len(parts) != _FIELDS:
        raise ParseError(
            f"expected {_FIELDS} tab-separated fields, got {len(parts)}",
            line=line_no,
            source=source,
        )
    ts_text, src, src_type, edge_type, dst, dst_type = parts
    try:
        ts = int(ts_text, 10)
    except ValueError:
        raise ParseError(f"bad timestamp {ts_text!r}", line=line_no, source=source) from None
    if ts < 0:
        raise ParseError(f"negative timestamp {ts}", line=line_no, source=source)
    if not (src and src_type and edge_type and dst and dst_type):
        raise ParseError("empty field", line=line_no, source=source)
    return RawEdge(ts, src, src_type, edge_type, dst, dst_type)


def format_edge_line(edge: RawEdge) -> str:
    return "\t".join(
        (str(edge.timestamp), edge.src, edge.src_type, edge.edge_type, edge.dst, edge.dst_type)
    )


def read_edge_stream(lines: Iterable[str] | IO[str], source: str | None = None) -> Iterator[RawEdge]:
    """Yield RawEdge for every data line, raising ParseError with line numbers."""
    for line_no, line in enumerate(lines, start=1):
        raw = parse_edge_line(line, line_no, source)
        if raw is not None:
            yield raw
