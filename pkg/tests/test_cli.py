import csv
import io
import json
import os
import pathlib
import subprocess
import sys

import jsonschema
import pytest

from ultradiff.cli import run_command

SCHEMA = json.loads((pathlib.Path(__file__).parent.parent / "docs" / "report.schema.json").read_text())


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv, "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return doc


def test_eval_example():
    assert run("--p", "2", "eval", "--expr", "phi32(x1)", "--at", "X^2") == (0, "X^3 + O(X^96)\n", "")


def test_globals_after_subcommand():
    a = run("--p", "3", "--prec", "8", "eval", "--expr", "x1^2", "--at", "1 + X")
    b = run("eval", "--expr", "x1^2", "--at", "1 + X", "--p", "3", "--prec", "8")
    assert a == b and a[1] == "1 + 2*X + X^2 + O(X^8)\n"


@pytest.mark.parametrize("argv, code, needle", [
    (["--p", "4", "eval", "--expr", "x1", "--at", "X"], 2, "p must be prime"),
    (["--prec", "3", "eval", "--expr", "x1", "--at", "X"], 2, "--prec must be >= 4"),
    (["eval", "--expr", "x1 +", "--at", "X"], 2, "position 4"),
    (["eval", "--expr", "x3", "--arity", "2", "--at", "X;X"], 2, "arity"),
    (["eval", "--expr", "x1", "--at", "X +"], 2, "position"),
    (["frobnicate"], 2, "invalid choice"),
    (["eval", "--at", "X"], 2, "required"),
    (["dd", "--expr", "x1^2", "--alpha", "1", "--at", "X;X"], 3, "zero to precision"),
    (["dd", "--expr", "x1^2", "--alpha", "1", "--at", "X;X^-1"], 2, "outside the domain"),
    (["eval", "--expr", "x1/(x1 - x2)", "--at", "X;X + O(X^4)"], 3, "cannot invert"),
    (["probe", "c2", "--n-max", "20", "--prec", "30"], 3, "needs precision >= 39"),
    (["--domain", "ball(0,64)", "--prec", "8", "check", "recursion", "--expr", "x1^2", "--alpha", "1"], 3, "attempts"),
    (["eval", "--expr", "x1", "--at", "X", "--domain", "O^2"], 2, "expected 2 coordinates"),
    (["eval", "--expr", "phi32(x1)", "--at", "X^-1"], 2, "unit ball"),
])
def test_exit_codes(argv, code, needle):
    got, out, err = run(*argv)
    assert got == code
    assert needle in err
    assert err.count("\n") == 1 and out == ""


def test_dd_dq_phi_commands():
    assert run("dd", "--expr", "phi32(x1)", "--alpha", "2", "--at", "0;X^2;X^2 + X^5")[1].startswith("X^-1 + 1 + X^2")
    assert run("dd", "--expr", "x1*x2", "--alpha", "1,1", "--at", "1;X;1;X", "--method", "recursive")[1] == "1 + O(X^64)\n"
    assert run("dq", "--expr", "x1*x2", "--at", "1;1;1;1;X")[1] == "X + O(X^63)\n"
    assert run("phi", "--k", "2", "--expr", "phi32(x1)", "--at", "X;1;1;X;X^2")[1].startswith("0 + O(")


def test_value_reports_validate():
    doc = run_json("dd", "--expr", "[x1^2, x1^3]", "--alpha", "1", "--at", "1;X")
    assert doc["op"] == "dd" and doc["alpha"] == [1] and len(doc["value"]) == 2
    run_json("eval", "--expr", "x1", "--at", "X")
    run_json("dq", "--k", "1", "--expr", "x1", "--at", "X;1;X")


@pytest.mark.parametrize("target, extra", [
    ("fviaphi", []),
    ("theta", ["--alpha", "1,1"]),
    ("symmetry", ["--alpha", "2,0"]),
    ("recursion", ["--alpha", "1,2"]),
    ("simpfml", ["--alpha", "1,0", "--beta", "0,0,1"]),
])
def test_check_reports(target, extra):
    doc = run_json("check", target, "--expr", "x1^2*x2 + x2^3", *extra, "--samples", "20", "--seed", "3")
    assert doc["op"] == target and doc["samples"] == doc["exact_matches"] == 20 and doc["failures"] == []


@pytest.mark.parametrize("samples", [1, 7, 25])
def test_check_csv_row_count(samples):
    code, out, _ = run("check", "theta", "--expr", "phi32(x1)", "--alpha", "2", "--samples", str(samples), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["sample", "exact_match", "point"]
    assert len(rows) == samples + 1
    assert all(r[1] == "1" for r in rows[1:])


def test_probe_reports():
    doc = run_json("probe", "holder", "--expr", "phi32(x1)", "--samples", "100")
    assert doc["sigma"] == "3/2" and doc["log_p_c"] == 1 and len(doc["rows"]) == 100
    doc = run_json("probe", "c2", "--n-max", "20")
    assert doc["rows"][-1]["abs"] == "2^10"
    doc = run_json("probe", "bcnorm", "--expr", "phi32(x1)", "--levels", "5,7,9,11", "--pin-c2", "--samples", "5")
    assert doc["verdict"].startswith("growing")


def test_probe_csv_rows():
    _, out, _ = run("probe", "c2", "--n-max", "12", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["n", "valuation"] and len(rows) == 1 + 6
    _, out, _ = run("probe", "holder", "--expr", "x1", "--samples", "40", "--format", "csv")
    assert len(list(csv.reader(io.StringIO(out)))) == 41


def test_counterexample_json():
    doc = run_json("--p", "2", "--prec", "64", "counterexample", "--n-max", "20", "--samples", "50")
    assert doc["verdict"] == "C^∞_Lud evidence complete; C^2 refuted."
    assert doc["blowup"][-1]["abs"] == "2^10"


def test_counterexample_text_and_csv():
    code, out, _ = run("counterexample", "--n-max", "6", "--samples", "20", "--prec", "32")
    assert code == 0 and out.rstrip().endswith("C^∞_Lud evidence complete; C^2 refuted.")
    _, out, _ = run("counterexample", "--n-max", "6", "--samples", "20", "--prec", "32", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["subcheck", "cases", "passed", "detail"] and len(rows) == 1 + 6 + 3


def test_deterministic_output():
    argv = ("check", "fviaphi", "--expr", "x1*x2 + x1^3", "--samples", "30", "--seed", "99", "--format", "json")
    assert run(*argv) == run(*argv)
    assert run(*argv)[1] != run(*argv[:-4], "--seed", "98", "--format", "json")[1]


def test_expr_file(tmp_path):
    path = tmp_path / "f.expr"
    path.write_text("phi32(x1)\n", encoding="utf-8")
    assert run("eval", "--expr-file", str(path), "--at", "X^2")[1] == "X^3 + O(X^96)\n"
    assert run("eval", "--expr-file", str(tmp_path / "missing"), "--at", "X")[0] == 2


def test_thread_count_does_not_change_output():
    argv = [sys.executable, "-m", "ultradiff", "check", "theta", "--expr", "x1^3*x2", "--alpha", "1,1",
            "--samples", "16", "--format", "json"]
    outs = []
    for threads in ("1", "3"):
        env = dict(os.environ, ULTRADIFF_THREADS=threads)
        proc = subprocess.run(argv, capture_output=True, text=True, env=env, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1]


def test_console_script():
    proc = subprocess.run(["ultradiff", "--p", "2", "eval", "--expr", "phi32(x1)", "--at", "X^2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "X^3 + O(X^96)\n"
