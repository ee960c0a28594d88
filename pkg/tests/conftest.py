import pytest

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    status = "PASS" if report.outcome == "passed" else "FAIL"
    _ACCEPTANCE.append((props["criterion"], status, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status, measured in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {crit:2d}: {status}  {measured}")


@pytest.fixture
def criterion(record_property):
    """Tag an acceptance test and attach its measured values to the summary line."""

    class Tag:
        def __init__(self):
            self.parts = []

        def __call__(self, number):
            record_property("criterion", number)
            return self

        def measured(self, text):
            self.parts.append(text)
            record_property("measured", "; ".join(self.parts))

    return Tag()
