import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("binlat", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("binlat")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for name, value in report.user_properties:
        if name == "criterion":
            number, title = value
            detail = dict(report.user_properties).get("detail", "")
            _CRITERIA[number] = (title, report.outcome, detail)


@pytest.fixture
def criterion(request, record_property):
    marker = request.node.get_closest_marker("criterion")
    record_property("criterion", tuple(marker.args))
    details = []

    def note(text):
        details.append(text)
        record_property("detail", "; ".join(details))

    return note


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"[{status}] criterion {number:2d}: {title}  ({detail})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
