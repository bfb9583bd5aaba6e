import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion.

    Usage: ``criterion(3, "per-strip optimality", detail)`` before asserting;
    the verdict is taken from the test outcome.
    """
    def record(number: int, title: str, detail: str = ""):
        request.node.user_properties.append(("criterion", (number, title, detail)))
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    for key, value in item.user_properties:
        if key == "criterion":
            number, title, detail = value
            verdict = "PASS" if rep.passed else "FAIL"
            _CRITERIA[number] = (verdict, f"{title}{' - ' + detail if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        verdict, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {verdict}  {text}")
