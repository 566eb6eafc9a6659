import pytest

from helpers import make_instance
from subsense.data import Dataset


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid:
                name = nodeid.split("::")[-1]
                outcomes[name] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, description in CRITERIA.items():
        verdict = outcomes.get(name, "NOT RUN")
        terminalreporter.write_line(f"[{verdict}] {description}")


@pytest.fixture
def two_sense_dataset():
    """One word, two clearly separable senses."""
    instances = []
    for i in range(4):
        instances.append(make_instance(
            f"bank.r{i}", "bank", f"He sat on the bank of the river {i}",
            gold="shore"))
    for i in range(4):
        instances.append(make_instance(
            f"bank.m{i}", "bank", f"She robbed the bank on street {i}",
            gold="finance"))
    return Dataset(name="toy", instances=tuple(instances))
