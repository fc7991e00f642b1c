import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _RESULTS[number] = (title, rep.outcome, detail, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, outcome, detail, duration = _RESULTS[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number:>2} {status}  {title} ({duration:.1f}s)"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
