"""End-to-end command line: gen -> stats -> plan -> run -> bench."""
from __future__ import annotations

import json

import pytest

from dgquery.cli import main
from dgquery.graph import read_edge_stream
from dgquery.query import parse_query
from dgquery.sjtree import SJTree
from dgquery.stats import SelectivityTable


def _gen_stream(tmp_path, name="stream.tsv", extra=()):
    path = tmp_path / name
    rc = main(["gen", "stream", "--edges", "400", "--seed", "5", "--out", str(path), *extra])
    assert rc == 0
    return path


def _gen_query(tmp_path, name="query.txt", extra=()):
    path = tmp_path / name
    rc = main(["gen", "query", "--edges", "3", "--seed", "6", "--out", str(path), *extra])
    assert rc == 0
    return path


def test_gen_stream_is_parseable_and_seeded(tmp_path):
    a = _gen_stream(tmp_path, "a.tsv")
    b = _gen_stream(tmp_path, "b.tsv")
    assert a.read_text() == b.read_text()
    with open(a) as fh:
        records = list(read_edge_stream(fh))
    assert len(records) == 400
    ts = [r.timestamp for r in records]
    assert ts == sorted(ts)


def test_gen_query_is_parseable(tmp_path):
    path = _gen_query(tmp_path)
    query = parse_query(path.read_text())
    assert query.n_edges == 3


def test_dgq_seed_env_overrides_flag(tmp_path, monkeypatch):
    direct = tmp_path / "direct.tsv"
    main(["gen", "stream", "--edges", "50", "--seed", "42", "--out", str(direct)])
    monkeypatch.setenv("DGQ_SEED", "42")
    env = tmp_path / "env.tsv"
    main(["gen", "stream", "--edges", "50", "--seed", "7", "--out", str(env)])
    assert direct.read_text() == env.read_text()
    monkeypatch.setenv("DGQ_SEED", "not-a-number")
    assert main(["gen", "stream", "--edges", "5", "--out", str(tmp_path / "x.tsv")]) == 2


def test_stats_command_writes_loadable_table(tmp_path, capsys):
    stream = _gen_stream(tmp_path)
    out = tmp_path / "stats.json"
    assert main(["stats", "--stream", str(stream), "--out", str(out)]) == 0
    table = SelectivityTable.load(str(out))
    assert table.sample_size == 400
    assert "400 edges" in capsys.readouterr().err


def test_plan_command_writes_tree_and_sidecar(tmp_path, capsys):
    stream = _gen_stream(tmp_path)
    query_path = _gen_query(tmp_path)
    stats = tmp_path / "stats.json"
    main(["stats", "--stream", str(stream), "--out", str(stats)])
    out = tmp_path / "plan.txt"
    rc = main([
        "plan", "--query", str(query_path), "--stats", str(stats),
        "--mode", "single", "--mean-degree", "2.0", "--out", str(out),
    ])
    assert rc == 0
    query = parse_query(query_path.read_text())
    tree = SJTree.deserialize(out.read_text(), query)
    assert len(tree.leaves()) == 3
    sidecar = json.loads((tmp_path / "plan.txt.json").read_text())
    assert sidecar["strategy"] == "SingleLazy"
    assert "strategy=SingleLazy" in capsys.readouterr().err


def test_run_strategies_agree(tmp_path, capsys):
    stream = _gen_stream(tmp_path)
    query_path = _gen_query(tmp_path)
    outputs = {}
    for strategy in ("single", "singlelazy", "vf2", "auto"):
        out = tmp_path / f"run.{strategy}.tsv"
        rc = main([
            "run", "--query", str(query_path), "--stream", str(stream),
            "--window", "6", "--strategy", strategy, "--out", str(out),
        ])
        assert rc == 0
        rows = [line.split("\t") for line in out.read_text().splitlines()]
        # seq, t_min, t_max, qedge=edge pairs
        outputs[strategy] = {row[3] for row in rows}
        assert all(len(row) == 4 for row in rows)
    assert outputs["single"] == outputs["singlelazy"] == outputs["vf2"] == outputs["auto"]
    capsys.readouterr()


def test_run_accepts_unbounded_window(tmp_path):
    stream = _gen_stream(tmp_path)
    query_path = _gen_query(tmp_path)
    rc = main([
        "run", "--query", str(query_path), "--stream", str(stream),
        "--window", "inf", "--strategy", "singlelazy",
        "--out", str(tmp_path / "o.tsv"),
    ])
    assert rc == 0


def test_bench_command_reports_all_strategies(tmp_path):
    out = tmp_path / "bench.tsv"
    rc = main([
        "bench", "--edges", "300", "--query-edges", "2", "--seed", "8",
        "--window", "5", "--strategies", "singlelazy,vf2", "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("query\tstrategy\tedges\twall_ms")
    body = [l.split("\t") for l in lines[1:]]
    assert [row[1] for row in body] == ["singlelazy", "vf2"]
    # both strategies saw the same stream and emitted the same count
    emitted = {row[5] for row in body}
    assert len(emitted) == 1


def test_bench_rejects_unknown_strategy(tmp_path, capsys):
    rc = main(["bench", "--strategies", "warp", "--out", str(tmp_path / "x.tsv")])
    assert rc == 2
    assert "unknown strategy" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    with pytest.raises(SystemExit) as ei:
        main(["run", "--query", "q", "--stream", "s", "--window", "0"])
    assert ei.value.code == 1
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 1
    capsys.readouterr()


def test_data_errors_exit_two(tmp_path, capsys):
    missing = str(tmp_path / "nope.txt")
    rc = main(["run", "--query", missing, "--stream", missing])
    assert rc == 2
    stream = _gen_stream(tmp_path)
    bad_query = tmp_path / "bad.txt"
    bad_query.write_text("node 0 A\nbroken\n")
    rc = main(["run", "--query", str(bad_query), "--stream", str(stream)])
    assert rc == 2
    rc = main(["gen", "stream", "--schema", "social", "--skew", "2.0",
               "--out", str(tmp_path / "y.tsv")])
    assert rc == 2  # --skew is a netflow knob
    capsys.readouterr()


def test_schema_pool_override(tmp_path):
    out = tmp_path / "n.tsv"
    rc = main(["gen", "stream", "--schema", "netflow", "--pool", "5",
               "--edges", "60", "--seed", "1", "--out", str(out)])
    assert rc == 0
    with open(out) as fh:
        hosts = {r.src for r in read_edge_stream(fh)}
    assert hosts <= {f"ip{i}" for i in range(5)}
