"""Incremental continuous-query engine for typed dynamic graph streams."""
from __future__ import annotations

from .baseline import DeltaOracle, RescanEngine, enumerate_matches, vf2_matches_containing
from .bench import STRATEGIES, BenchReport, run_strategy, run_sweep
from .engine import Counters, Engine, ResultLog, match_primitive
from .errors import (
    ContractError,
    DgqError,
    LabelConflictError,
    MismatchError,
    ParseError,
    PlanError,
    StreamOrderError,
    UnsupportedPrimitiveError,
)
from .generate import (
    Schema,
    generate_stream,
    kpartite_query,
    kpartite_schema,
    netflow_schema,
    random_query,
    random_schema,
    social_schema,
)
from .graph import (
    DegreeStats,
    DynamicGraph,
    EdgeRecord,
    RawEdge,
    format_edge_line,
    parse_edge_line,
    read_edge_stream,
)
from .planner import (
    STRATEGY_THRESHOLD,
    Plan,
    PrimitiveCatalog,
    build_sj_tree,
    choose_strategy,
    decomposition_advisories,
    expected_selectivity,
    plan_query,
    relative_selectivity,
)
from .query import (
    EMPTY_MATCH,
    Match,
    QueryEdge,
    QueryGraph,
    QueryPiece,
    format_query,
    join,
    parse_query,
    project,
    time_span,
)
from .sjtree import SJTree, SJTreeNode, join_key
from .stats import (
    SelectivityTable,
    collect_stats,
    count_2edge_paths,
    count_edge_types,
    primitive_key,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # graph
    "RawEdge",
    "EdgeRecord",
    "DynamicGraph",
    "DegreeStats",
    "parse_edge_line",
    "format_edge_line",
    "read_edge_stream",
    # query model
    "QueryGraph",
    "QueryEdge",
    "QueryPiece",
    "Match",
    "EMPTY_MATCH",
    "join",
    "project",
    "time_span",
    "parse_query",
    "format_query",
    # join tree
    "SJTree",
    "SJTreeNode",
    "join_key",
    # statistics
    "SelectivityTable",
    "collect_stats",
    "count_edge_types",
    "count_2edge_paths",
    "primitive_key",
    # planning
    "PrimitiveCatalog",
    "build_sj_tree",
    "plan_query",
    "Plan",
    "choose_strategy",
    "expected_selectivity",
    "relative_selectivity",
    "decomposition_advisories",
    "STRATEGY_THRESHOLD",
    # engines
    "Engine",
    "Counters",
    "ResultLog",
    "match_primitive",
    "RescanEngine",
    "vf2_matches_containing",
    "enumerate_matches",
    "DeltaOracle",
    # workloads
    "Schema",
    "social_schema",
    "kpartite_schema",
    "netflow_schema",
    "random_schema",
    "generate_stream",
    "random_query",
    "kpartite_query",
    # bench
    "STRATEGIES",
    "BenchReport",
    "run_strategy",
    "run_sweep",
    # errors
    "DgqError",
    "StreamOrderError",
    "LabelConflictError",
    "ContractError",
    "UnsupportedPrimitiveError",
    "ParseError",
    "PlanError",
    "MismatchError",
]
