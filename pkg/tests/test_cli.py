import csv
import io
import json

import pytest

from werden.cli import run

SCHEMA = {"input", "static", "dynamic", "alpha", "oracle", "max_abs_err", "verdict"}
SUM_FIELDS = {"kind", "value", "N", "dropped", "reference", "abs_err", "includes_alpha"}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_ddiff_cubic_increment():
    code, out, _ = call("ddiff", "x^3", "--var", "x")
    assert code == 0
    assert "dy = 3*x^2*dx + 3*x*dx^2 + dx^3" in out
    assert "F^o(x) = 3*x^2 + 3*x*dx + dx^2" in out
    assert "exact: yes" in out


def test_ddiff_truncated_marks_tail():
    code, out, _ = call("ddiff", "sin(x)", "--order", "3")
    assert code == 0
    assert "+ O(dx^4)" in out and "exact: no" in out


def test_restore_squared_sine():
    code, out, _ = call("restore", "sin(x)^2", "--var", "x")
    assert code == 0
    assert out.strip() == "1/2*x - 1/4*sin(2*x) + C"


def test_integrate_csv():
    code, out, _ = call("integrate", "3*x^2", "--a", "0", "--b", "1", "--N", "1000", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["N", "value", "reference", "abs_err", "slope_estimate"]
    assert [int(r["N"]) for r in rows] == [1000, 10_000, 100_000]
    assert all(float(r["abs_err"]) <= 6e-3 for r in rows)


def test_integrate_json_schema():
    code, out, _ = call("integrate", "3*x^2", "--a", "0", "--b", "1", "--format", "json")
    data = json.loads(out)
    assert code == 0 and set(data) == SUM_FIELDS
    assert data["abs_err"] == abs(data["value"] - data["reference"])


def test_integrate_empty_interval():
    code, out, _ = call("integrate", "x*sin(x)", "--a", "1", "--b", "1", "--format", "json")
    assert code == 0 and json.loads(out)["value"] == 0.0


def test_integrate_without_reference_in_text():
    code, out, _ = call("integrate", "x*sin(x)", "--a", "0", "--b", "1")
    assert code == 0 and "reference" not in out


def test_hypo():
    code, out, _ = call("hypo", "3*x^2", "--a", "0", "--b", "1", "--N", "10000",
                        "--drop", "2500,5000,7500", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["bound_ok"] is True and data["dropped"] == [2500, 5000, 7500]
    assert SUM_FIELDS <= set(data)


def test_diff_and_nderiv():
    code, out, _ = call("diff", "x^3", "--format", "json")
    data = json.loads(out)
    assert code == 0 and set(data) == SCHEMA and data["static"] == "3*x^2"
    code, out, _ = call("nderiv", "x^3", "--n", "2", "--format", "json")
    data = json.loads(out)
    assert data["dynamic"] == "6*x + 3*d1x + 3*d2x" and data["at_zero"] == "6*x"


@pytest.mark.parametrize("argv", [
    ["ddiff", "x +"],
    ["integrate", "x", "--N", "0"],
    ["integrate", "x", "--a", "2", "--b", "1"],
    ["ddiff", "x", "--order", "0"],
    ["hypo", "x", "--N", "10", "--drop", "10"],
    ["hypo", "x", "--N", "2", "--drop", "0,1,a"],
    ["restore", "cos(x)", "--unknown"],
    ["frobnicate", "x"],
    ["nderiv", "sin(x)", "--n", "5", "--order", "2"],
])
def test_invalid_input_exit_two(argv):
    code, out, err = call(*argv)
    assert code == 2 and out == "" and err.startswith("error:")
    assert "Traceback" not in err


@pytest.mark.parametrize("argv", [
    ["restore", "x*sin(x)"],
    ["integrate", "1/x", "--a", "-1", "--b", "1"],
    ["integrate", "x*sin(x)", "--format", "csv"],
])
def test_domain_or_no_rule_exit_three(argv):
    code, out, err = call(*argv)
    assert code == 3 and out == "" and err.startswith("error:")


@pytest.mark.parametrize("argv", [
    ["ddiff", "sin(x)*exp(x)", "--format", "json"],
    ["integrate", "sin(x)", "--a", "0", "--b", "1.5", "--format", "csv"],
    ["verify", "--format", "csv"],
])
def test_deterministic(argv):
    assert call(*argv) == call(*argv)


def test_verify_default_corpus():
    code, out, err = call("verify")
    assert code == 0
    assert "FAIL" not in out and err == ""


def test_verify_singular_corpus(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("func | 1/x | -1 | 1 | restore\n")
    code, out, err = call("verify", str(path))
    assert code == 2 and "error" in err and "Traceback" not in err


def test_verify_empty_corpus(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("# nothing here\n")
    code, out, err = call("verify", str(path), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["passed"] and data["checks"] == []
    assert "warning" in err


def test_verify_missing_file(tmp_path):
    code, _, err = call("verify", str(tmp_path / "absent.txt"))
    assert code == 2
