import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dxconcord.cli import fixture_path
from dxconcord.concordance import analyze_cohort
from dxconcord.snapshot_store import Ledger, load_cohort


@pytest.fixture(scope="session")
def fixture_file():
    return fixture_path()


@pytest.fixture(scope="session")
def fixture_cases(fixture_file):
    return load_cohort(fixture_file)


@pytest.fixture(scope="session")
def fixture_results(fixture_cases):
    return analyze_cohort(fixture_cases)


@pytest.fixture
def fixture_ledger(tmp_path, fixture_cases):
    ledger = Ledger(tmp_path / "ledger.jsonl")
    for case in fixture_cases:
        ledger.append_case(case)
    return ledger


_criteria = {}


def pytest_configure(config):
    for i in range(1, 13):
        config.addinivalue_line("markers", f"AC{i:02d}: acceptance criterion {i}")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for kw in report.keywords:
        if kw.startswith("AC") and kw[2:].isdigit():
            cid = kw
            break
    else:
        return
    ok = report.passed
    _criteria[cid] = _criteria.get(cid, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria):
        terminalreporter.write_line(f"{cid}: {'PASS' if _criteria[cid] else 'FAIL'}")
