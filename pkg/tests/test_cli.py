"""Command-line interface: commands, exit codes, report formats and
configuration precedence."""
import json
import os

import pytest
from click.testing import CliRunner

from synkit.cli import build_config, main

from conftest import corpus_path

SMALL = corpus_path("small_nodes.lus")
SYS1 = corpus_path("sys1.lus")


@pytest.fixture
def runner():
    return CliRunner()


def test_check_valid_file(runner):
    res = runner.invoke(main, ["check", SYS1])
    assert res.exit_code == 0
    assert "Filter" in res.output and "6 node(s) ok" in res.output


def test_check_causality_cycle(runner, tmp_path):
    bad = tmp_path / "bad.lus"
    bad.write_text("node A (x: bool) returns (y: bool)\n"
                   "var z: bool;\nlet y = z; z = y; tel\n")
    res = runner.invoke(main, ["check", str(bad)])
    assert res.exit_code == 1
    assert "cycle" in res.output


def test_check_unbound_node(runner, tmp_path):
    bad = tmp_path / "bad.lus"
    bad.write_text("node A (x: bool) returns (y: bool)\n"
                   "let y = Missing(x); tel\n")
    res = runner.invoke(main, ["check", str(bad)])
    assert res.exit_code == 1


def test_sim_cnt_golden(runner):
    csv = "round,En\n0,false\n1,true\n2,false\n3,true\n"
    res = runner.invoke(main, ["sim", SYS1, "Cnt"], input=csv)
    assert res.exit_code == 0
    assert res.output.splitlines() == [
        "round,En,C", "0,false,0", "1,true,1", "2,false,1", "3,true,2"]


def test_sim_zero_steps_header_only(runner):
    res = runner.invoke(main, ["sim", SYS1, "Cnt", "--steps", "0"], input="round,En\n")
    assert res.exit_code == 0
    assert res.output.splitlines() == ["round,En,C"]


def test_sim_unknown_node(runner):
    res = runner.invoke(main, ["sim", SYS1, "Nope", "--steps", "1"], input="")
    assert res.exit_code == 1


def test_falsify_finds_test_case(runner):
    res = runner.invoke(main, ["falsify", SMALL, "Cnt", "--obj", "C >= 2",
                               "--kmax", "4"])
    assert res.exit_code == 0
    assert "witnessed_round: 1" in res.output
    # trace CSV of length 2 (rounds 0 and 1)
    assert "1,true,2" in res.output


def test_falsify_objective_unreachable_exit_2(runner):
    res = runner.invoke(main, ["falsify", SMALL, "Cnt", "--obj", "false",
                               "--kmax", "3"])
    assert res.exit_code == 2
    assert "none" in res.output


def test_falsify_json_superset(runner):
    res = runner.invoke(main, ["falsify", SMALL, "Cnt", "--obj", "C >= 2",
                               "--kmax", "4", "--json"])
    assert res.exit_code == 0
    data = json.loads(res.output.splitlines()[-1])  # skip the seed line
    assert data["found"] and data["witnessed_round"] == 1
    assert "generator" in data and "trace_csv" in data


def test_falsify_writes_artifacts(runner, tmp_path):
    base = str(tmp_path / "tc")
    res = runner.invoke(main, ["falsify", SMALL, "Cnt", "--obj", "C >= 2",
                               "--kmax", "4", "--out", base])
    assert res.exit_code == 0
    assert os.path.exists(base + ".csv") and os.path.exists(base + ".meta")


def test_falsify_seed_printed(runner):
    res = runner.invoke(main, ["falsify", SMALL, "Cnt", "--obj", "C >= 1",
                               "--kmax", "2", "--seed", "7"])
    assert "seed: 7" in res.stderr


def test_prove_fig3(runner):
    res = runner.invoke(main, ["prove", corpus_path("fig3.proof"),
                               "-p", SYS1])
    assert res.exit_code == 0
    assert "all obligations hold" in res.output


def test_prove_json_superset(runner):
    res = runner.invoke(main, ["prove", corpus_path("fig3.proof"),
                               "-p", SYS1, "--json"])
    assert res.exit_code == 0
    data = json.loads(res.output)
    assert data["ok"] and len(data["nodes"]) == 12
    assert all({"path", "rule", "goal", "status"} <= set(n) for n in
               data["nodes"])


def test_prove_bad_shape_exit_2(runner, tmp_path):
    script = tmp_path / "bad.proof"
    script.write_text("goal: Cnt |= obs(C >= 0 @ 3)\nrule: Temp\n"
                      "j: 0\nk: 2\nstate_pred: pre_C >= 0\n"
                      "premise { goal: C(Cnt, init) |= obs(pre_C' >= 0 @ 0)\n"
                      "  rule: V }\n"
                      "premise { goal: C(Cnt, pre_C >= 0) |= obs(C >= 0 @ 2)\n"
                      "  rule: V }\n")
    good = runner.invoke(main, ["prove", str(script), "-p", SMALL])
    assert good.exit_code == 0
    bad = script.read_text().replace("@ 3", "@ 2")
    script.write_text(bad)
    res = runner.invoke(main, ["prove", str(script), "-p", SMALL])
    assert res.exit_code == 2
    assert "expected" in res.output or "FAIL" in res.output


def test_prove_counterexample_csv_emitted(runner, tmp_path):
    script = tmp_path / "false.proof"
    script.write_text("goal: Cnt |= obs(C = 5 @ 1)\nrule: V\n")
    res = runner.invoke(main, ["prove", str(script), "-p", SMALL,
                               "--cex-dir", str(tmp_path / "cex")])
    assert res.exit_code == 2
    files = os.listdir(tmp_path / "cex")
    assert len(files) == 1
    body = (tmp_path / "cex" / files[0]).read_text()
    assert body.startswith("round,")


def test_config_precedence_flags_env_file(tmp_path, monkeypatch):
    cfg_file = tmp_path / "synkit.json"
    cfg_file.write_text(json.dumps({"timeout": 11, "jobs": 2}))
    # file only
    cfg = build_config(str(cfg_file))
    assert cfg.smt.timeout == 11 and cfg.jobs == 2
    # env overrides file
    monkeypatch.setenv("SYNKIT_TIMEOUT", "22")
    cfg = build_config(str(cfg_file))
    assert cfg.smt.timeout == 22
    # flag overrides env
    cfg = build_config(str(cfg_file), timeout=33.0)
    assert cfg.smt.timeout == 33


def test_config_env_solver_command(monkeypatch):
    monkeypatch.setenv("SYNKIT_SMT_SOLVER", "mysolver --flag")
    cfg = build_config(None)
    assert cfg.smt.command == ["mysolver", "--flag"]


def test_config_rejects_bad_values():
    import click
    with pytest.raises(click.ClickException):
        build_config(None, timeout=-1.0)
