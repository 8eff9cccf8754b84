import re

import pytest

_RESULTS: dict[int, list[bool]] = {}
_DETAILS: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m:
        k = int(m.group(1))
        _RESULTS.setdefault(k, []).append(report.passed)
        _DETAILS.setdefault(k, []).extend(v for name, v in report.user_properties if name == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        verdict = "PASS" if all(_RESULTS[k]) else "FAIL"
        detail = " | ".join(_DETAILS.get(k, []))
        terminalreporter.write_line(f"ACCEPTANCE criterion {k}: {verdict}" + (f"  [{detail}]" if detail else ""))


@pytest.fixture(scope="session")
def table1():
    from thmc.io import load_fixture
    return load_fixture("marijuana")
