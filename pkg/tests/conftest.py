import os

import pytest

os.environ.setdefault("DUELFUEL_THREADS", "1")

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            number, title = m.args
            _CRITERIA.setdefault(number, {"title": title, "failed": 0, "passed": 0, "skipped": 0})
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    entry = _CRITERIA[number]
    if report.when == "call" or report.outcome != "passed":
        if report.failed:
            entry["failed"] += 1
        elif report.skipped:
            entry["skipped"] += 1
        elif report.when == "call":
            entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        if e["failed"]:
            status = "FAIL"
        elif e["passed"] and not e["skipped"]:
            status = "PASS"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(
            f"criterion {number:2d} {status}: {e['title']} ({e['passed']} passed, {e['failed']} failed)")


@pytest.fixture
def canonical():
    from duelfuel.model import canonical_spec

    return canonical_spec()
