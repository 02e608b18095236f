import json
import subprocess
import sys

import pytest

from ellrec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value(out):
    return complex(*json.loads(out)["value"])


def test_eval_theta_at_zero_nome(capsys):
    code, out, _ = run(capsys, "eval", "theta", "p=[0,0]", "x=[0.3,0]")
    assert code == 0
    assert value(out) == 0.7
    assert json.loads(out)["function"] == "theta"


def test_eval_psi_on_diagonal(capsys):
    code, out, _ = run(capsys, "eval", "psi", "x=[0.8,0.3]", "y=x")
    assert code == 0 and value(out) == 0


def test_eval_integral_dimension_zero(capsys):
    code, out, _ = run(capsys, "eval", "integral", "n=0")
    assert code == 0 and value(out) == 1
    assert json.loads(out)["metadata"]["dimension"] == 0


def test_eval_defaults_and_params_file(capsys, tmp_path):
    code, out, _ = run(capsys, "eval", "gamma")
    assert code == 0
    path = tmp_path / "params.json"
    path.write_text(json.dumps({"x": 0.5, "p": 0.3, "q": 0.25}))
    code, out2, _ = run(capsys, "eval", "gamma", "--params", str(path), "x=[0.5,0.2]",
                        "p=[0.3,0.1]", "q=[0.25,-0.05]")
    assert code == 0 and value(out) == value(out2)
    dest = tmp_path / "out.json"
    assert run(capsys, "eval", "pochhammer", "a=0", "--out", str(dest))[0] == 0
    assert complex(*json.loads(dest.read_text())["value"]) == 1


def test_eval_usage_errors(capsys):
    code, _, err = run(capsys, "eval", "nope")
    assert code == 2 and json.loads(err)["error"] == "UsageError"
    assert run(capsys, "eval", "theta", "x=[1,2,3]")[0] == 2
    assert run(capsys, "eval", "theta", "p=[1.2,0]")[0] == 2
    assert run(capsys, "eval", "psi", "y=w")[0] == 2


def test_eval_guard_exit_code(capsys):
    code, _, err = run(capsys, "eval", "integral", "n=5", "nodes=64")
    assert code == 3 and json.loads(err)["error"] == "BudgetExceeded"


def test_verify_identity(capsys, tmp_path):
    dest = tmp_path / "report.json"
    code, _, err = run(capsys, "verify", "--identity", "three_term", "--identity", "okada",
                       "--trials", "2", "--seed", "3", "--out", str(dest))
    assert code == 0 and "all pass" in err
    report = json.loads(dest.read_text())
    assert [r["identity_id"] for r in report["results"]] == ["okada", "three_term"]
    assert report["passed"] and report["seed"] == 3


def test_verify_exit_codes(capsys):
    assert run(capsys, "verify", "--suite", "recurrences_long")[0] == 3
    assert run(capsys, "verify", "--suite", "nope")[0] == 2
    assert run(capsys, "verify", "--identity", "nope")[0] == 2
    assert run(capsys, "verify", "--identity", "okada", "--tol", "okada=1e-3")[0] == 2
    assert run(capsys, "verify", "--identity", "okada", "--tol", "x")[0] == 2
    assert run(capsys, "verify", "--identity", "okada", "--trials", "0")[0] == 2
    assert run(capsys, "verify", "--suite", "theta_ids", "--level", "1")[0] == 2


def test_verify_tightened_tolerance_can_fail(capsys):
    code, out, err = run(capsys, "verify", "--identity", "cauchy_det", "--trials", "3",
                         "--tol", "cauchy_det=1e-30")
    assert code == 1 and "FAILED: cauchy_det" in err
    assert not json.loads(out)["passed"]


def test_verify_family(capsys):
    code, out, _ = run(capsys, "verify", "--family", "bilinear_q", "--seed", "2")
    body = json.loads(out)
    assert code == 0 and body["family"] == "q" and body["passed"]
    assert run(capsys, "verify", "--family", "gtof_n4")[0] == 3
    assert run(capsys, "verify", "--family", "qhalf", "--level", "-1")[0] == 0


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0
    assert any(line.startswith("okada ") for line in out.splitlines())
    assert "[exploratory]" in out
    code, out, _ = run(capsys, "list", "--json")
    rows = json.loads(out)
    assert {"okada", "bilinear_q"} <= {r["identity_id"] for r in rows}


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "ellrec", "eval", "theta", "p=0", "x=0.25"],
                          capture_output=True, text=True, check=False)
    assert done.returncode == 0
    assert json.loads(done.stdout)["value"] == [0.75, 0.0]


def test_argparse_rejects_missing_target():
    with pytest.raises(SystemExit):
        main(["verify"])
