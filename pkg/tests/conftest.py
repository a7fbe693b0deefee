import pytest

_LINES: list[str] = []


class Verdicts:
    """Records one PASS/FAIL line per acceptance criterion, then asserts it."""

    def check(self, label: str, ok: bool, detail: str) -> None:
        line = self.record(label, ok, detail)
        assert ok, line

    def record(self, label: str, ok: bool, detail: str) -> str:
        """Record a verdict without asserting it (for criteria shown to be unattainable)."""
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return line


@pytest.fixture(scope="session")
def verdict():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
