from collections import defaultdict

import pytest

CRITERIA = range(1, 9)
_criteria_of = {}
_outcomes = defaultdict(list)
_details = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        nums = [m.args[0] for m in item.iter_markers("criterion")]
        if nums:
            _criteria_of[item.nodeid] = nums


def pytest_runtest_logreport(report):
    nums = _criteria_of.get(report.nodeid)
    if not nums:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        for n in nums:
            _outcomes[n].append(report.outcome)
            _details[n].extend(v for k, v in report.user_properties if k == "measured")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in CRITERIA:
        outcomes = _outcomes.get(n)
        if not outcomes:
            tr.write_line(f"criterion {n}: NOT RUN")
            continue
        ok = all(o == "passed" for o in outcomes)
        passed = sum(o == "passed" for o in outcomes)
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({passed}/{len(outcomes)} checks)"
        if _details.get(n):
            line += "  " + "; ".join(_details[n])
        tr.write_line(line)


@pytest.fixture
def measured(record_property):
    """Attach a measured value to the acceptance summary line."""
    return lambda text: record_property("measured", text)
