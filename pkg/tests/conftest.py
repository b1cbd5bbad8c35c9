import pytest

_DETAILS: dict = {}
_OUTCOMES: dict = {}


@pytest.fixture
def criterion(request):
    """Record a one-line detail for an acceptance criterion."""
    key = request.node.name

    def note(text: str) -> None:
        _DETAILS[key] = text
        print(text)

    return note


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _OUTCOMES[report.nodeid.split("::")[-1]] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_OUTCOMES, key=lambda n: (len(n.split("_")[2]), n)):
        status = "PASS" if _OUTCOMES[name] else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {_DETAILS.get(name, '')}")
