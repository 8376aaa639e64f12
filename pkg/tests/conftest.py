import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = title = None
    detail = []
    for key, value in report.user_properties:
        if key == "criterion":
            number, title = value
        elif key == "detail":
            detail.append(value)
    if number is None:
        return
    entry = _criteria.setdefault(number, {"title": title, "passed": True, "detail": []})
    entry["passed"] &= report.outcome == "passed"
    entry["detail"].extend(detail)
    if report.outcome != "passed":
        entry["detail"].append(f"{report.nodeid.split('::')[-1]} {report.outcome}")


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None and call.when in ("setup", "call"):
        if not any(k == "criterion" for k, _ in item.user_properties):
            item.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["passed"] else "FAIL"
        line = f"{status} criterion {number}: {entry['title']}"
        if entry["detail"]:
            line += " | " + "; ".join(entry["detail"])
        terminalreporter.write_line(line)
