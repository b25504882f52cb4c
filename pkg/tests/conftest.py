"""Shared fixtures plus the acceptance checklist printed after a run."""
import pytest

_CHECKLIST = []


class CriterionLog:
    """Collects one line per acceptance criterion for the final summary."""

    def check(self, name: str, passed: bool, detail: str = ""):
        _CHECKLIST.append((name, bool(passed), detail))
        assert passed, f"{name}: {detail}"

    def note(self, name: str, detail: str):
        _CHECKLIST.append((name, True, detail))


@pytest.fixture(scope="session")
def criteria():
    return CriterionLog()


def pytest_terminal_summary(terminalreporter):
    if not _CHECKLIST:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed, detail in _CHECKLIST:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
