import pytest

_CRITERIA: dict[int, tuple[str, str, list]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    notes = [f"{k}={v}" for k, v in item.user_properties]
    _CRITERIA[n] = (title, status, notes)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, notes = _CRITERIA[n]
        tr.write_line(f"criterion {n:2d} {status}  {title}")
        for note in notes:
            tr.write_line(f"    {note}")
