"""Acceptance criteria, one test each.

Criteria 1-11 read the check records of ``dclab report-all --seed 7``;
criterion 12 compares two such runs with the timing block removed. Every
test prints a ``criterion N: PASS|FAIL`` line and the same lines are
repeated in the terminal summary.
"""

import json
import subprocess
import sys

import pytest

from dclab.suite import RUNTIME_LIMITS

SEED = 7

# criterion id -> check name and pinned tolerances
CRITERIA = {
    1: "basis-orthonormality",
    2: "coset-orthogonality",
    3: "coset-span",
    4: "us-collision",
    5: "hat-basis",
    6: "uc-collision",
    7: "tilde-lower-bounds",
    8: "solution-count-statistics",
    9: "dcsp-measurement",
    10: "dcp-reduction",
    11: "mode-equivalence",
}


def _report_all(tmp_path_factory, tag):
    out = tmp_path_factory.mktemp(tag) / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "dclab", "report-all", "--seed", str(SEED), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode in (0, 1), proc.stderr
    return proc.returncode, out.read_text()


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return [_report_all(tmp_path_factory, f"run{i}") for i in range(2)]


@pytest.fixture(scope="module")
def report(runs):
    return json.loads(runs[0][1])


def _log(acceptance_log, criterion, ok, text):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {text}"
    print(line)
    acceptance_log.append(line)


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(criterion, report, acceptance_log):
    name = CRITERIA[criterion]
    checks = [c for c in report["checks"] if c["name"] == name]
    assert len(checks) == 1, f"{name} must appear exactly once"
    check = checks[0]
    seconds = report["timing"][name]["seconds"]
    limit = RUNTIME_LIMITS[name]
    ok = check["verdict"] == "pass" and seconds < limit
    observed = json.dumps(check["observed"], sort_keys=True)
    if len(observed) > 160:
        observed = observed[:157] + "..."
    _log(acceptance_log, criterion, ok, f"{name} observed={observed} time={seconds:.2f}s/<{limit:g}s")
    assert check["criterion"] == criterion
    assert check["verdict"] == "pass", check
    assert seconds < limit


def test_exit_status_matches_verdicts(runs, report):
    failed = any(c["verdict"] == "fail" for c in report["checks"])
    assert runs[0][0] == (1 if failed else 0)
    assert len(report["checks"]) == len(CRITERIA)


def test_criterion_12_determinism(runs, acceptance_log):
    def strip(text):
        doc = json.loads(text)
        doc.pop("timing")
        return json.dumps(doc, sort_keys=True, indent=2)

    a, b = (strip(text) for _, text in runs)
    ok = a == b
    _log(acceptance_log, 12, ok, f"report-all --seed {SEED} twice: {'identical' if ok else 'differs'} ({len(a)} bytes)")
    assert ok
