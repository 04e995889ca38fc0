import json
import subprocess
import sys
from importlib import resources

import pytest

from cda_arena.cli import parse_ratios, run

FAST = ["--duration", "5", "--sessions", "2", "--ratios", "5:15,10:10"]


def fixture_path(name):
    return str(resources.files("cda_arena").joinpath("fixtures", name))


@pytest.mark.parametrize("argv", [
    ["--pair", "AA:NOPE", "--out", "x"],
    ["--pair", "AA-ZIC", "--out", "x"],
    ["--pair", "AA:ZIC", "--ratios", "3:3", "--out", "x"],
    ["--pair", "AA:ZIC", "--ratios", "a:b", "--out", "x"],
    ["--pair", "AA:ZIC", "--sessions", "0", "--out", "x"],
    ["--pair", "AA:ZIC", "--all-pairs", "--out", "x"],
    ["--engine", "gpu", "--pair", "AA:ZIC"],
    ["--out", "x"],
    ["--fixture-graph", "/no/such/file.csv"],
    ["--pair", "AA:ZIC", "--params", "/no/such.params", "--out", "x"],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CDA_ARENA_OUT", raising=False)
    assert run(argv) == 1


def test_missing_out(monkeypatch):
    monkeypatch.delenv("CDA_ARENA_OUT", raising=False)
    assert run(["--pair", "AA:ZIC"]) == 1


def test_parse_ratios():
    assert parse_ratios("1:19, 10:10") == ((1, 19), (10, 10))
    assert len(parse_ratios("all")) == 19


def test_fixture_graph_stdout(capsys):
    assert run(["--fixture-graph", fixture_path("table1_bse.csv")]) == 0
    out = capsys.readouterr().out
    assert "AA -> ZIC" in out and "ZIC -> " not in out


def test_fixture_graph_to_dir(tmp_path):
    assert run(["--fixture-graph", fixture_path("table1_tbse.csv"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "table1_tbse.dot").read_text().startswith("digraph")
    m = json.loads((tmp_path / "table1_tbse.manifest.json").read_text())
    assert m["fixture"].endswith("table1_tbse.csv")


def test_pair_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["--pair", "gvwy:zic", "--out", str(a)] + FAST) == 0
    assert run(["--pair", "GVWY:ZIC", "--out", str(b)] + FAST) == 0
    leaf = "GVWY_ZIC/sync/static"
    for f in ("totals.csv", "sessions.csv"):
        assert (a / leaf / f).read_bytes() == (b / leaf / f).read_bytes()
    m = json.loads((a / leaf / "manifest.json").read_text())
    assert m["status"] == "ok" and m["base_seed"] == 0
    assert len(m["params_sha256"]) == 64
    assert m["flags"]["pair"] == "gvwy:zic" and m["contests"][0]["wins_a"] >= 0
    assert not list(a.rglob("*.tmp"))


def test_all_pairs_writes_graph(tmp_path):
    argv = ["--all-pairs", "--out", str(tmp_path), "--duration", "3", "--sessions", "1",
            "--ratios", "10:10", "--p0", "dynamic"]
    assert run(argv) == 0
    assert (tmp_path / "totals_sync_dynamic.csv").read_text().count("\n") == 16
    dot = (tmp_path / "dominance_sync_dynamic.dot").read_text()
    assert dot.count("->") == 15
    m = json.loads((tmp_path / "manifest_sync_dynamic.json").read_text())
    assert len(m["contests"]) == 15 and set(m["graph"]["outdegree"]) == {
        "AA", "GDX", "GVWY", "SHVR", "ZIC", "ZIP"}


def test_env_out_and_module_entry(tmp_path):
    env = {"CDA_ARENA_OUT": str(tmp_path), "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "cda_arena.cli", "--pair", "SHVR:GVWY"] + FAST,
                          env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "SHVR_GVWY/sync/static/totals.csv").exists()


def test_async_pair_smoke(tmp_path):
    argv = ["--pair", "GVWY:ZIC", "--engine", "async", "--wall-clock", "0.2", "--sessions", "1",
            "--ratios", "10:10", "--out", str(tmp_path)]
    assert run(argv) == 0
    assert "async" in (tmp_path / "GVWY_ZIC/async/static/totals.csv").read_text()
