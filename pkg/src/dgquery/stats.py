"""Frequency statistics over a graph window and the selectivity table built
from them.

Two primitive families are profiled:

* arity 1 — typed directed edges, keyed ``(src_type, edge_type, dst_type)``;
* arity 2 — 2-edge paths through a shared center vertex, keyed
  ``(center_type, d1, d2)`` where each descriptor is
  ``(edge_type, far_type, direction)`` with direction "out"/"in" relative to
  the center, and ``d1 <= d2`` canonically.

Path counting is a single pass: per center vertex, tally incident edge
descriptors, then combine counts pairwise — ``n*(n-1)/2`` within one
descriptor, ``n1*n2`` across two.  Parallel edges therefore count with their
multiplicities, and total work is linear in edges plus the pair-combination
term, never quadratic in the vertex count.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import ContractError, ParseError, UnsupportedPrimitiveError
from .graph import DynamicGraph, EdgeRecord, RawEdge
from .query import QueryGraph

__all__ = [
    "Descriptor",
    "EdgeKey",
    "PathKey",
    "map_edge",
    "count_edge_types",
    "count_2edge_paths",
    "SelectivityTable",
    "collect_stats",
]

Descriptor = tuple[str, str, str]          # (edge_type, far_type, "out"|"in")
EdgeKey = tuple[str, str, str]             # (src_type, edge_type, dst_type)
PathKey = tuple[str, Descriptor, Descriptor]

MapHook = Callable[[Descriptor], Descriptor]

STATS_VERSION = 1


def map_edge(e: EdgeRecord, center: str, hook: MapHook | None = None) -> Descriptor:
    """Describe ``e`` as seen from ``center``: (edge label, far label, role).

    A self-loop is described once, in its out role.  ``hook`` may rewrite the
    descriptor (e.g. collapse labels); raising ContractError when center is
    not an endpoint.
    """
    if e.src == center:
        desc = (e.edge_type, e.dst_type, "out")
    elif e.dst == center:
        desc = (e.edge_type, e.src_type, "in")
    else:
        raise ContractError(f"vertex {center!r} is not an endpoint of edge {e.edge_id}")
    return hook(desc) if hook else desc


def count_edge_types(edges: Iterable[EdgeRecord | RawEdge]) -> dict[EdgeKey, int]:
    """Histogram of typed directed edges over any edge iterable."""
    counts: dict[EdgeKey, int] = {}
    for e in edges:
        key = (e.src_type, e.edge_type, e.dst_type)
        counts[key] = counts.get(key, 0) + 1
    return counts


def count_2edge_paths(graph: DynamicGraph, hook: MapHook | None = None) -> dict[PathKey, int]:
    """Count all 2-edge paths in the live window, grouped by canonical key."""
    counts: dict[PathKey, int] = {}
    for vid, label in graph.vertices():
        local: dict[Descriptor, int] = {}
        for e in graph.neighbors(vid, "any"):
            desc = map_edge(e, vid, hook)
            local[desc] = local.get(desc, 0) + 1
        if len(local) == 1:
            ((d, n),) = local.items()
            if n > 1:
                key = (label, d, d)
                counts[key] = counts.get(key, 0) + n * (n - 1) // 2
            continue
        descs = sorted(local)
        for i, d1 in enumerate(descs):
            n1 = local[d1]
            if n1 > 1:
                key = (label, d1, d1)
                counts[key] = counts.get(key, 0) + n1 * (n1 - 1) // 2
            for d2 in descs[i + 1:]:
                key = (label, d1, d2)
                counts[key] = counts.get(key, 0) + n1 * local[d2]
    return counts


def _canonical_path_key(center_label: str, d1: Descriptor, d2: Descriptor) -> PathKey:
    if d2 < d1:
        d1, d2 = d2, d1
    return (center_label, d1, d2)


@dataclass
class SelectivityTable:
    """Primitive frequencies plus the totals that normalize them."""

    sample_size: int
    arity1: dict[EdgeKey, int] = field(default_factory=dict)
    arity2: dict[PathKey, int] = field(default_factory=dict)

    @property
    def total1(self) -> int:
        return sum(self.arity1.values())

    @property
    def total2(self) -> int:
        return sum(self.arity2.values())

    # ------------------------------------------------------------ selectivity

    def edge_selectivity(self, key: EdgeKey) -> float:
        total = self.total1
        if total == 0:
            return 0.0
        return self.arity1.get(key, 0) / total

    def path_selectivity(self, key: PathKey) -> float:
        total = self.total2
        if total == 0:
            return 0.0
        return self.arity2.get(key, 0) / total

    def frequency(self, arity: int, key: EdgeKey | PathKey) -> int:
        table = self.arity1 if arity == 1 else self.arity2
        return table.get(key, 0)  # type: ignore[arg-type]

    def subgraph_selectivity(self, query: QueryGraph, edge_ids: Iterable[int]) -> float:
        """Selectivity of a 1- or 2-edge sub-pattern of ``query``."""
        arity, key = primitive_key(query, edge_ids)
        return self.edge_selectivity(key) if arity == 1 else self.path_selectivity(key)

    # ------------------------------------------------------------- persistence

    def to_json(self) -> str:
        doc = {
            "version": STATS_VERSION,
            "N": self.sample_size,
            "arity1": [
                {"src_type": s, "edge_type": e, "dst_type": d, "count": c}
                for (s, e, d), c in sorted(self.arity1.items())
            ],
            "arity2": [
                {
                    "center_type": center,
                    "d1": {"edge_type": d1[0], "far_type": d1[1], "dir": d1[2]},
                    "d2": {"edge_type": d2[0], "far_type": d2[1], "dir": d2[2]},
                    "count": c,
                }
                for (center, d1, d2), c in sorted(self.arity2.items())
            ],
            "totals": {"arity1": self.total1, "arity2": self.total2},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str, source: str | None = None) -> "SelectivityTable":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", source=source) from None
        if not isinstance(doc, dict):
            raise ParseError("stats document must be an object", source=source)
        for field_name in ("version", "N", "arity1", "arity2", "totals"):
            if field_name not in doc:
                raise ParseError(f"missing field {field_name!r}", source=source)
        if doc["version"] != STATS_VERSION:
            raise ParseError(
                f"unsupported stats version {doc['version']!r} (want {STATS_VERSION})",
                source=source,
            )
        table = cls(sample_size=int(doc["N"]))
        try:
            for row in doc["arity1"]:
                key = (row["src_type"], row["edge_type"], row["dst_type"])
                table.arity1[key] = int(row["count"])
            for row in doc["arity2"]:
                d1 = (row["d1"]["edge_type"], row["d1"]["far_type"], row["d1"]["dir"])
                d2 = (row["d2"]["edge_type"], row["d2"]["far_type"], row["d2"]["dir"])
                table.arity2[_canonical_path_key(row["center_type"], d1, d2)] = int(row["count"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed stats row: {exc}", source=source) from None
        totals = doc["totals"]
        if not isinstance(totals, dict) or "arity1" not in totals or "arity2" not in totals:
            raise ParseError("totals must carry arity1 and arity2", source=source)
        if int(totals["arity1"]) != table.total1 or int(totals["arity2"]) != table.total2:
            raise ParseError("totals do not match the row sums", source=source)
        return table

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(self.to_json())

    @classmethod
    def load(cls, path: str) -> "SelectivityTable":
        with open(path, encoding="utf-8") as fp:
            return cls.from_json(fp.read(), source=path)


def primitive_key(query: QueryGraph, edge_ids: Iterable[int]) -> tuple[int, EdgeKey | PathKey]:
    """Canonical statistics key of a 1- or 2-edge query sub-pattern."""
    ids = sorted(edge_ids)
    if len(ids) == 1:
        e = query.edges[ids[0]]
        return 1, (query.vertex_label(e.src), e.label, query.vertex_label(e.dst))
    if len(ids) != 2:
        raise UnsupportedPrimitiveError(
            f"selectivity is defined for 1- or 2-edge primitives, got {len(ids)} edges"
        )
    e1, e2 = query.edges[ids[0]], query.edges[ids[1]]
    shared = {e1.src, e1.dst} & {e2.src, e2.dst}
    if not shared:
        raise UnsupportedPrimitiveError("2-edge primitive must share a vertex")

    def keyed_at(center: int) -> PathKey:
        descs = []
        for e in (e1, e2):
            if e.src == center:
                descs.append((e.label, query.vertex_label(e.dst), "out"))
            else:
                descs.append((e.label, query.vertex_label(e.src), "in"))
        return _canonical_path_key(query.vertex_label(center), descs[0], descs[1])

    # parallel qedges have two candidate centers; take the lexically smaller key
    return 2, min(keyed_at(c) for c in sorted(shared))


def collect_stats(records: Iterable[RawEdge], hook: MapHook | None = None) -> SelectivityTable:
    """Build the table from a stream sample (full window, nothing expires)."""
    graph = DynamicGraph(window=None)
    n = 0
    arity1: dict[EdgeKey, int] = {}
    for raw in records:
        rec = graph.add_edge(raw)
        key = (rec.src_type, rec.edge_type, rec.dst_type)
        arity1[key] = arity1.get(key, 0) + 1
        n += 1
    table = SelectivityTable(sample_size=n)
    table.arity1 = arity1
    table.arity2 = count_2edge_paths(graph, hook)
    return table
