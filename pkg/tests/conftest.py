import pytest

_results = {}
_details = {}


@pytest.fixture
def detail(request):
    """Record a measured value for the acceptance summary."""
    m = request.node.get_closest_marker("criterion")

    def add(text):
        _details.setdefault(m.args[0] if m else request.node.name, []).append(text)
        print(text)

    return add


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, label): acceptance criterion number and short label")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marks = getattr(report, "_criterion", None)
    if marks:
        _results[marks] = report.outcome


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, label), outcome in sorted(_results.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status}  {label}")
        for line in _details.get(num, []):
            terminalreporter.write_line(f"    {line}")
