"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

_criteria: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            entry = _criteria.setdefault(number, {"title": title, "outcomes": []})
            entry["tests"] = entry.get("tests", 0) + 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number = mark.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _criteria[number]["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        outs = entry["outcomes"]
        if not outs:
            status = "NOT RUN"
        elif all(o == "passed" for o in outs) and len(outs) == entry["tests"]:
            status = "PASS"
        elif any(o == "failed" for o in outs):
            status = "FAIL"
        else:
            status = "INCOMPLETE"
        terminalreporter.write_line(f"criterion {number:2d} {status:10s} {entry['title']}")
