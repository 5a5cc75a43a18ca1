import time

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    yield
    item.user_properties.append(("elapsed", time.perf_counter() - start))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    props = dict(item.user_properties)
    number, title = marker.args
    _results[number] = (title, rep.outcome, props.get("elapsed", 0.0), props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, outcome, elapsed, detail = _results[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number:>2} {status}  {title} ({elapsed:.1f}s)"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
