import csv
import io
import json
import subprocess
import sys

import pytest

from stochsub import cli
from stochsub import io as instance_io
from stochsub.evaluate import validate_objective
from stochsub.verify import SuiteResult


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def tight4(tmp_path, capsys):
    path = tmp_path / "tight4.json"
    assert run(["gen", "tight", "--n", "4", "--copies", "2", "--budget", "5", "--out", str(path)], capsys)[0] == 0
    return path


@pytest.fixture
def random5(tmp_path, capsys):
    path = tmp_path / "r5.json"
    argv = ["gen", "random", "--n", "5", "--support", "2", "--matroid-kind", "partition", "--seed", "3", "--out", str(path)]
    assert run(argv, capsys)[0] == 0
    return path


def test_gen_tight_loads_and_validates(tmp_path, capsys):
    path = tmp_path / "t.json"
    assert run(["gen", "tight", "--n", "4", "--out", str(path)], capsys)[0] == 0
    inst, m = instance_io.load(path)
    assert inst.n == 64 and m.rank == 16
    assert validate_objective(inst).valid


def test_gen_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(["gen", "random", "--n", "5", "--support", "2", "--objective", "table", "--seed", "8", "--out", str(p)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_exact_accepts_generated(random5, capsys):
    code, out, _ = run(["exact", "--instance", str(random5)], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["opt_nonadaptive"] <= data["opt_adaptive"] + 1e-9
    assert data["myopic"] >= 0.5 * data["opt_adaptive"] - 1e-9


def test_run_csv_and_trace(random5, tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    code, out, err = run(["run", "--instance", str(random5), "--policy", "myopic", "--seed", "7",
                          "--replicates", "100", "--trace", str(trace)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["policy"] == "myopic" and rows[0]["seed"] == "7"
    assert float(rows[0]["mc_ci95"]) >= 0
    steps = [json.loads(l) for l in trace.read_text().splitlines()]
    assert {s["replicate"] for s in steps} == set(range(100))
    assert json.loads(err.splitlines()[0])["config"]["seed"] == 7


def test_bound_certificate(tight4, capsys):
    code, out, _ = run(["bound", "--instance", str(tight4)], capsys)
    assert code == 0
    cert = json.loads(out)
    assert cert["A"] / cert["N"] > 1
    assert all(link["ok"] for link in cert["links"])


def test_matroid_override(random5, capsys):
    code, out, _ = run(["exact", "--instance", str(random5), "--matroid", "uniform:1"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["opt_adaptive"] == pytest.approx(data["opt_nonadaptive"])
    code, _, _ = run(["exact", "--instance", str(random5), "--matroid", '{"kind": "uniform", "k": 2}'], capsys)
    assert code == 0


def test_gap_rows_increase(capsys):
    code, out, _ = run(["gap", "--n", "10,30,100", "--replicates", "200", "--seed", "1"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    ratios = [float(r["ratio"]) for r in rows]
    assert [int(r["n"]) for r in rows] == [10, 30, 100]
    assert ratios == sorted(ratios)


def test_verify_small_suite(capsys):
    code, out, _ = run(["verify", "--suite", "small", "--seed", "1"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["cases"] == 500 and data["ok"] and data["violations"] == []


def test_verify_failure_exit_code(monkeypatch, capsys):
    bad = SuiteResult(cases=1, violations=[{"check": "myopic_half", "case": 0}])
    monkeypatch.setattr(cli, "run_suite", lambda count, seed: bad)
    code, out, err = run(["verify", "--count", "1"], capsys)
    assert code == cli.EXIT_VERIFY
    assert "myopic_half" in err


def test_usage_errors(random5, capsys):
    assert run(["run", "--bogus"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    assert run(["run"], capsys)[0] == 1  # missing --instance
    assert run(["run", "--instance", str(random5), "--policy", "nope"], capsys)[0] == 1
    assert run(["gen", "random", "--n", "3", "--seed", "-1"], capsys)[0] == 1
    assert run(["gap", "--n", "ten"], capsys)[0] == 1


def test_io_error(tmp_path, capsys):
    assert run(["exact", "--instance", str(tmp_path / "missing.json")], capsys)[0] == 2
    assert run(["gen", "tight", "--n", "3", "--out", str(tmp_path / "no" / "dir.json")], capsys)[0] == 2


def test_invalid_instance_file(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"objective": {"kind": "coverage"}, "elements": [{"id": 3, "support": []}]}')
    code, _, err = run(["exact", "--instance", str(path)], capsys)
    assert code == 1 and "ids" in err


def test_cap_exceeded(tight4, capsys):
    code, _, err = run(["exact", "--instance", str(tight4), "--cap-scenarios", "10"], capsys)
    assert code == 4
    assert "Monte Carlo" in err


def test_config_defaults_flags_win(random5, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5, "replicates": 40}))
    code, out, err = run(["run", "--instance", str(random5), "--config", str(cfg), "--seed", "9"], capsys)
    assert code == 0
    config = json.loads(err.splitlines()[0])["config"]
    assert (config["seed"], config["replicates"]) == (9, 40)
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["run", "--instance", str(random5), "--config", str(cfg)], capsys)[0] == 1


def test_help_lists_every_shared_flag(capsys):
    for sub in ("gen", "run", "exact", "bound", "gap", "verify"):
        code, text, _ = run([sub, "--help"], capsys)
        assert code == 0
        for flag in ("--instance", "--matroid", "--policy", "--seed", "--replicates", "--samples",
                     "--steps", "--out", "--cap-scenarios", "--config"):
            assert flag in text


def test_console_entry_point(tmp_path):
    out = tmp_path / "t.json"
    proc = subprocess.run([sys.executable, "-m", "stochsub", "gen", "tight", "--n", "2", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert instance_io.load(out)[0].n == 8
