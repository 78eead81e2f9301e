import csv
import io
import json
import subprocess
import sys

import pytest

from cascaded_cdc import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_design_dump(capsys):
    code, out, _ = run(["design", "--s", "2", "--x", "4,6"], capsys)
    assert code == 0
    dump = json.loads(out)
    files = {n["node"]: len(n["files"]) for n in dump["nodes"]}
    assert all(files[k] == 6 for k in range(1, 5))
    assert all(files[k] == 4 for k in range(5, 11))


def test_design_table(capsys):
    code, out, _ = run(["design", "--x", "2,2,4", "--format", "table"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 9
    assert lines[1].split() == ["1", "1", "8", "8"]
    assert lines[8].split() == ["8", "3", "4", "4"]


@pytest.mark.parametrize("argv,needle", [
    (["design", "--x", "1,6"], "x_1=1"),
    (["design", "--s", "3", "--x", "4,6"], "s=3"),
    (["design"], "group sizes x are required"),
    (["design", "--x", "4,a"], "x must be a list"),
])
def test_design_usage_errors(argv, needle, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2
    assert needle in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('s = 2\nx = [4, 6]\neta1 = 2\nseed = 3\n')
    code, out, _ = run(["design", "--config", str(cfg)], capsys)
    assert json.loads(out)["N"] == 48
    code, out, _ = run(["design", "--config", str(cfg), "--eta1", "1"], capsys)
    assert json.loads(out)["N"] == 24
    cfg.write_text('x = "2, 2, 4"\n')
    code, out, _ = run(["design", "--config", str(cfg)], capsys)
    assert json.loads(out)["X"] == 16


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('x = [4, 6]\nbogus = 1\n')
    with pytest.raises(SystemExit):
        cli.main(["design", "--config", str(cfg)])
    assert "bogus" in capsys.readouterr().err


def test_simulate_two_group(capsys):
    code, out, _ = run(["simulate", "--x", "4,6"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["match"] is True
    assert rep["normalized_load"]["numerator"] == "7" and rep["normalized_load"]["denominator"] == "12"
    assert rep["computation_load"]["numerator"] == "2"
    assert [r["transmissions"] for r in rep["shuffle"]["rounds"]] == [96, 720]


def test_simulate_three_group_both_strategies(capsys):
    _, out, _ = run(["simulate", "--x", "2,2,4"], capsys)
    rep = json.loads(out)
    assert rep["normalized_load"]["decimal"] == 0.4875 and rep["match"] is True
    code, out, _ = run(["simulate", "--x", "2,2,4", "--strategy", "all-b"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["match"] is None
    assert rep["normalized_load"]["decimal"] > 0.4875


def test_simulate_csv_and_out(tmp_path, capsys):
    out_path = tmp_path / "ledger.csv"
    code, out, _ = run(["simulate", "--x", "2,3", "--format", "csv", "--out", str(out_path)], capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(out_path.open()))
    assert {r["method"] for r in rows} == {"A", "B"}


def test_simulate_is_deterministic(capsys):
    argv = ["simulate", "--x", "3,2,2", "--seed", "5", "--eta2", "2"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv + ["--jobs", "4"], capsys)
    assert first == second


def test_simulate_bad_t_bits(capsys):
    code, _, err = run(["simulate", "--x", "2,3", "--t-bits", "16"], capsys)
    assert code == 1 and "divisible by 3" in err


def test_simulate_failing_audit_exits_nonzero(monkeypatch, capsys):
    from cascaded_cdc import oracle

    real = oracle.audit_delivery

    def broken(design, mapout, delivered):
        rep = real(design, mapout, delivered)
        rep.missing.append({"node": 1, "function": 1, "file": 1})
        return rep

    monkeypatch.setattr(oracle, "audit_delivery", broken)
    code, out, _ = run(["simulate", "--x", "2,2"], capsys)
    assert code == 1 and json.loads(out)["ok"] is False


def test_verify(capsys):
    code, out, _ = run(["verify", "--x", "2,3"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["ok"]
    assert rep["bruteforce_load"]["numerator"] == "17" and rep["bruteforce_load"]["denominator"] == "36"
    assert rep["requester_histogram"] == {"0": 6, "1": 18, "2": 12}


def test_verify_guard(capsys):
    code, _, err = run(["verify", "--x", "4,6", "--oracle-limit", "10"], capsys)
    assert code == 1 and "guard" in err


def test_sweep_uniform_family(capsys):
    code, out, _ = run(["sweep", "--uniform", "3:2:5", "--simulate"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert [r["x"] for r in rows] == ["2 2 2", "3 3 3", "4 4 4", "5 5 5"]
    assert all(r["simulated_load"] == r["formula_load"] and r["match"] == "true" for r in rows)


def test_sweep_spec_file(tmp_path, capsys, caplog):
    spec = tmp_path / "sweep.toml"
    spec.write_text('configs = [[4, 6], [1, 3]]\n\n[[family]]\ns = 2\nmin = 2\nmax = 3\nkind = "grid"\n')
    code, out, err = run(["sweep", "--config", str(spec)], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["x"] for r in rows] == ["4 6", "2 2", "2 3", "3 3"]
    assert rows[0]["formula_load"] == "7/12" and rows[0]["round_bits"] == "96;240"
    assert rows[0]["simulated_load"] == ""
    assert "skipping config x=(1, 3)" in caplog.text


def test_sweep_empty(capsys):
    code, out, _ = run(["sweep"], capsys)
    assert code == 0 and out == ",".join(cli.SWEEP_HEADER) + "\n"


def test_sweep_parallel_same_output():
    spec = {"family": [{"s": 2, "min": 2, "max": 4, "kind": "grid"}]}
    assert cli.cmd_sweep(spec, True, jobs=1) == cli.cmd_sweep(spec, True, jobs=3)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cascaded_cdc", "design", "--x", "2,2", "--format", "table"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[0].split() == ["node", "group", "files", "functions"]
