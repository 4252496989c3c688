"""Acceptance gate: one test per exit criterion.

The suites run once through the ``verify`` command (seed 7); each test then
checks its own criterion and records a PASS/FAIL line for the summary.
"""

import json
import subprocess
import sys

import pytest

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

SEED = 7


@pytest.fixture(scope="session")
def verify_run():
    res = subprocess.run([sys.executable, "-m", "wickstar", "verify", "--seed", str(SEED)],
                         capture_output=True, text=True, timeout=1800)
    data = json.loads(res.stdout)
    return res.returncode, {c["criterion"]: c for c in data["criteria"]}, res.stderr


def record(number: int, passed: bool, text: str) -> None:
    flag = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"criterion {number:2d} {flag}  {text}")


@pytest.mark.parametrize("number", range(1, 12))
def test_criterion(verify_run, number):
    _, results, _ = verify_run
    res = results[number]
    record(number, res["passed"], f"{res['title']}: {res['summary']}")
    assert res["passed"], res["summary"] + "\n" + json.dumps(res["rows"][:5], indent=1)


def test_criterion_12_verify_exits_zero(verify_run):
    code, results, _ = verify_run
    ok = code == 0 and sorted(results) == list(range(1, 12))
    record(12, ok, f"verify --seed {SEED} exit status {code}")
    assert ok
