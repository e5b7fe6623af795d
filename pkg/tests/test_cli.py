import csv
import json
import subprocess
import sys

import pytest

from dclab import __version__
from dclab.cli import build_parser, run

SUBCOMMANDS = ["verify-basis", "alg1", "alg2", "dcsp", "dcp-demo", "t-stats", "report-all"]


def report(capsys, argv):
    code = run(argv)
    return code, json.loads(capsys.readouterr().out)


def test_help_lists_subcommands(capsys):
    assert run(["--help"]) == 0
    out = capsys.readouterr().out
    for name in SUBCOMMANDS:
        assert name in out


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_every_flag_has_a_default(name):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[name]
    for action in sub._actions:
        if action.dest == "help":
            continue
        assert action.help and ("default" in action.help or action.default is None), action.dest


@pytest.mark.parametrize(
    "argv", [["bogus"], [], ["alg1", "--nope"], ["alg1", "--unitary", "other"], ["alg1", "--N", "1"], ["t-stats", "--b", "12"]]
)
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_verify_basis(capsys):
    code, rep = report(capsys, ["verify-basis", "--N", "3", "--k", "2"])
    assert code == 0
    assert rep["version"] == "1" and rep["tool_version"] == __version__
    assert set(rep) >= {"version", "config", "seed", "checks", "timing"}
    checks = {c["name"]: c for c in rep["checks"]}
    assert checks["coset-orthogonality"]["observed"] <= 1e-10
    assert checks["basis-orthonormality"]["observed"]["entries"] == 36
    assert all(c["verdict"] == "pass" for c in rep["checks"])


def test_basis_export(tmp_path, capsys):
    path = tmp_path / "basis.json"
    code, _ = report(capsys, ["verify-basis", "--N", "2", "--k", "1", "--export-basis", str(path)])
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["schema"] == "dclab.basis/1" and len(doc["entries"]) == 4


def test_t_stats(tmp_path, capsys):
    path = tmp_path / "hist.csv"
    code, rep = report(capsys, ["t-stats", "--N", "4", "--k", "3", "--mode", "exhaustive", "--csv", str(path)])
    assert code == 0
    assert rep["checks"][0]["observed"]["mean"] == 1.75
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_minus_1", "count"]
    assert sum(int(r[1]) for r in rows[1:]) == 64


def test_alg2_example(capsys):
    code, rep = report(capsys, ["alg2", "--N", "4", "--k", "4", "--unitary", "canonical", "--trials", "10000", "--seed", "7"])
    assert code == 0
    for cell in rep["checks"][0]["details"]["cells"]:
        assert cell["sample_ok"] and cell["formula"] == "(2/|T|)(1-1/|T|)"


def test_failed_check_exits_1(capsys):
    # an unreachable recovery target must fail the run
    code, rep = report(capsys, ["dcp-demo", "--runs", "3", "--min-rate", "1.01"])
    assert code == 1 and rep["checks"][0]["verdict"] == "fail"


def test_out_file_and_determinism(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["alg1", "--N", "4", "--k", "3", "--trials", "300", "--seed", "3", "--out", str(p)]) == 0
    a, b = (json.loads(p.read_text()) for p in paths)
    a.pop("timing"), b.pop("timing")
    assert a == b
    assert "threads" not in a["config"]


def test_threads_do_not_change_results(capsys):
    _, a = report(capsys, ["alg2", "--N", "4", "--k", "3", "--trials", "300", "--threads", "1"])
    _, b = report(capsys, ["alg2", "--N", "4", "--k", "3", "--trials", "300", "--threads", "4"])
    assert a["checks"] == b["checks"]


def test_budget_env_var_is_a_usage_error():
    proc = subprocess.run(
        [sys.executable, "-m", "dclab", "verify-basis", "--N", "3", "--k", "2"],
        env={"DCL_MAX_AMPLITUDES": "16", "PATH": ""},
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "budget" in proc.stderr


def test_report_all_subset(capsys):
    code, rep = report(capsys, ["report-all", "--only", "basis-orthonormality", "mode-equivalence"])
    assert code == 0
    assert [c["name"] for c in rep["checks"]] == ["basis-orthonormality", "mode-equivalence"]
    assert set(rep["timing"]) == {"basis-orthonormality", "mode-equivalence", "total_seconds"}
